//! Built-in route and scenario suites.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{segment_routes, SegmentMargins, SegmentMode};
use crate::episode::{EpisodeSpec, StaticProp};
use crate::geometry::{Polyline, Pose2D, Vec2};
use crate::sim::{ScenarioKind, ScenarioSpec};
use crate::{Error, Result};

/// Names accepted by [`builtin`].
pub const BUILTIN_SUITES: [&str; 3] = ["demo", "nonhazard", "stop-turn"];

pub const DEFAULT_SPEED_LIMIT: f64 = 8.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDef {
    pub id: String,
    pub speed_limit: f64,
    pub points: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeDef {
    pub id: String,
    pub route: String,
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub props: Vec<StaticProp>,
    pub seed: u64,
}

/// Routes plus the episodes driven on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub name: String,
    pub routes: Vec<RouteDef>,
    pub episodes: Vec<EpisodeDef>,
}

impl Catalog {
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.routes.iter().enumerate() {
            if self.routes[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidSpec(alloc::format!("duplicate route id '{}'", r.id)));
            }
            if !(r.speed_limit > 0.0) {
                return Err(Error::InvalidSpec(alloc::format!("route '{}' needs a positive speed limit", r.id)));
            }
            Polyline::new(r.points.clone())?;
        }
        for (i, e) in self.episodes.iter().enumerate() {
            if self.episodes[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::InvalidSpec(alloc::format!("duplicate episode id '{}'", e.id)));
            }
            if !self.routes.iter().any(|r| r.id == e.route) {
                return Err(Error::InvalidSpec(alloc::format!("episode '{}' references unknown route '{}'", e.id, e.route)));
            }
        }
        Ok(())
    }

    /// Resolved episodes, in catalog order.
    pub fn episode_specs(&self) -> Result<Vec<EpisodeSpec>> {
        self.validate()?;
        self.episodes
            .iter()
            .map(|e| {
                let r = self.routes.iter().find(|r| r.id == e.route).expect("validated");
                Ok(EpisodeSpec {
                    id: e.id.clone(),
                    route: Polyline::new(r.points.clone())?,
                    speed_limit: r.speed_limit,
                    scenarios: e.scenarios.clone(),
                    props: e.props.clone(),
                    seed: e.seed,
                })
            })
            .collect()
    }
}

pub fn builtin(name: &str) -> Option<Catalog> {
    match name {
        "demo" => Some(demo_suite()),
        "nonhazard" => Some(nonhazard_suite()),
        "stop-turn" => Some(stop_turn_suite()),
        _ => None,
    }
}

/// Polyline construction from straights and arcs. Arcs are sampled every
/// meter at most.
#[derive(Debug, Clone)]
pub struct RouteBuilder {
    points: Vec<Vec2>,
    heading: f64,
}

impl RouteBuilder {
    pub fn new(start: Vec2, heading: f64) -> Self {
        Self { points: alloc::vec![start], heading }
    }

    fn last(&self) -> Vec2 {
        *self.points.last().expect("builder always has a start point")
    }

    pub fn straight(mut self, length: f64) -> Self {
        let p = self.last() + Vec2::from_angle(self.heading) * length;
        self.points.push(p);
        self
    }

    /// Arc of `radius`, turning left for positive `angle`.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let side = angle.signum();
        let center = self.last() + Vec2::from_angle(self.heading).perp() * (radius * side);
        let steps = ((radius * angle.abs()).ceil() as usize).max(4);
        let start = self.heading - side * FRAC_PI_2;
        for k in 1..=steps {
            let a = start + angle * k as f64 / steps as f64;
            self.points.push(center + Vec2::from_angle(a) * radius);
        }
        self.heading += angle;
        self
    }

    pub fn length_so_far(&self) -> f64 {
        Polyline::new(self.points.clone()).map(|p| p.length()).unwrap_or(0.0)
    }

    pub fn build(self) -> Result<Polyline> {
        Polyline::new(self.points)
    }
}

fn route_def(id: String, line: &Polyline) -> RouteDef {
    RouteDef { id, speed_limit: DEFAULT_SPEED_LIMIT, points: line.points().to_vec() }
}

/// Ten seeded episodes per scenario kind. Each is a straight, a turn and a
/// long straight with the scenario after the turn, cut down to the piece
/// around the scenario.
pub fn demo_suite() -> Catalog {
    let mut routes = Vec::new();
    let mut episodes = Vec::new();
    for (ki, kind) in ScenarioKind::ALL.iter().enumerate() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64((ki as u64) * 1000 + seed);
            let lead_in = rng.random_range(80.0..120.0);
            let radius = rng.random_range(15.0..25.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let angle = sign * rng.random_range(60.0f64..90.0).to_radians();
            let builder = RouteBuilder::new(Vec2::ZERO, 0.0).straight(lead_in).arc(radius, angle);
            let turn_end = builder.length_so_far();
            let base = builder.straight(320.0).build().expect("valid route");
            let trigger = turn_end + rng.random_range(40.0..80.0);
            let scenario = ScenarioSpec { kind: *kind, trigger_distance: trigger, distance_param: kind.nominal_distance(), seed };
            let seg = segment_routes(&base, &[scenario], SegmentMode::One, &SegmentMargins::default()).expect("trigger lies on the route");
            let seg = &seg[0];
            let id = alloc::format!("{}_{:02}", kind.as_str(), seed);
            routes.push(route_def(id.clone(), &seg.polyline));
            episodes.push(EpisodeDef { id: id.clone(), route: id, scenarios: seg.scenarios.clone(), props: Vec::new(), seed: (ki as u64) * 100 + seed });
        }
    }
    Catalog { name: "demo".to_string(), routes, episodes }
}

/// Hazard-free driving: straights, turns and single static obstacles.
pub fn nonhazard_suite() -> Catalog {
    let shapes: [(&str, RouteBuilder); 6] = [
        ("straight", RouteBuilder::new(Vec2::ZERO, 0.0).straight(250.0)),
        ("left_turn", RouteBuilder::new(Vec2::ZERO, 0.0).straight(100.0).arc(20.0, FRAC_PI_2).straight(120.0)),
        ("right_turn", RouteBuilder::new(Vec2::ZERO, 0.0).straight(100.0).arc(20.0, -FRAC_PI_2).straight(120.0)),
        ("s_curve", RouteBuilder::new(Vec2::ZERO, 0.0).straight(60.0).arc(25.0, FRAC_PI_2 / 2.0).straight(20.0).arc(25.0, -FRAC_PI_2 / 2.0).straight(100.0)),
        ("swerve_straight", RouteBuilder::new(Vec2::ZERO, 0.0).straight(250.0)),
        ("swerve_after_turn", RouteBuilder::new(Vec2::ZERO, 0.0).straight(60.0).arc(20.0, FRAC_PI_2).straight(180.0)),
    ];
    let mut routes = Vec::new();
    let mut episodes = Vec::new();
    for (i, (id, b)) in shapes.into_iter().enumerate() {
        let line = b.build().expect("valid route");
        let scenarios = match id {
            "swerve_straight" => alloc::vec![ScenarioSpec { kind: ScenarioKind::StaticObstacleSwerve, trigger_distance: 80.0, distance_param: 35.0, seed: 0 }],
            "swerve_after_turn" => alloc::vec![ScenarioSpec { kind: ScenarioKind::StaticObstacleSwerve, trigger_distance: 110.0, distance_param: 35.0, seed: 1 }],
            _ => Vec::new(),
        };
        routes.push(route_def(id.to_string(), &line));
        episodes.push(EpisodeDef { id: id.to_string(), route: id.to_string(), scenarios, props: Vec::new(), seed: i as u64 });
    }
    Catalog { name: "nonhazard".to_string(), routes, episodes }
}

/// Stop line followed by a tight turn with a barrier along its outside.
/// The ego waits at a red light and then has to make the turn from rest.
pub fn stop_turn_suite() -> Catalog {
    let mut routes = Vec::new();
    let mut episodes = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let radius = rng.random_range(STOP_TURN_RADIUS.0..STOP_TURN_RADIUS.1);
        let sign = if seed % 2 == 0 { 1.0 } else { -1.0 };
        let line_s = 60.0;
        let gap = rng.random_range(1.0..3.0);
        let b = RouteBuilder::new(Vec2::ZERO, 0.0).straight(line_s + gap);
        let turn_start = b.length_so_far();
        let b = b.arc(radius, sign * FRAC_PI_2);
        let turn_end = b.length_so_far();
        let line = b.straight(60.0).build().expect("valid route");
        let props = outer_barrier(&line, turn_start - 2.0, turn_end + 10.0, -sign * BARRIER_OFFSET);
        let id = alloc::format!("stop_turn_{seed:02}");
        routes.push(route_def(id.clone(), &line));
        episodes.push(EpisodeDef {
            id: id.clone(),
            route: id,
            scenarios: alloc::vec![ScenarioSpec { kind: ScenarioKind::RedLight, trigger_distance: line_s, distance_param: 15.0, seed }],
            props,
            seed: 900 + seed,
        });
    }
    Catalog { name: "stop-turn".to_string(), routes, episodes }
}

const STOP_TURN_RADIUS: (f64, f64) = (7.0, 9.0);
/// Route centerline to the barrier's inner face, m.
const BARRIER_OFFSET: f64 = 3.0;
const BARRIER_HALF: (f64, f64) = (0.6, 0.4);

/// Small blocks every 1.2 m with their inner face at lateral offset `d`.
fn outer_barrier(line: &Polyline, s0: f64, s1: f64, d: f64) -> Vec<StaticProp> {
    let center_d = d + d.signum() * BARRIER_HALF.1;
    let mut out = Vec::new();
    let mut s = s0;
    while s <= s1 {
        let p = line.offset_point(s, center_d);
        out.push(StaticProp { pose: Pose2D::new(p.x, p.y, line.heading_at(s)), half_length: BARRIER_HALF.0, half_width: BARRIER_HALF.1 });
        s += 1.2;
    }
    out
}
