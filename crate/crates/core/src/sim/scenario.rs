use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Actor, ActorKind, ActorScript, DriveScript, InfractionMonitor, MapFeatures, SimConfig, StopSign, TrafficLight, WalkScript, WorldState};
use crate::expert::idm::IdmParams;
use crate::geometry::{Polygon, Polyline, Pose2D, Vec2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    LeadVehicle,
    CrossingWalker,
    RedLight,
    StopSign,
    StaticObstacleSwerve,
    MergeFromLeft,
    MergeFromRight,
    OncomingVehicle,
    OpeningDoor,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::LeadVehicle,
        ScenarioKind::CrossingWalker,
        ScenarioKind::RedLight,
        ScenarioKind::StopSign,
        ScenarioKind::StaticObstacleSwerve,
        ScenarioKind::MergeFromLeft,
        ScenarioKind::MergeFromRight,
        ScenarioKind::OncomingVehicle,
        ScenarioKind::OpeningDoor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::LeadVehicle => "lead_vehicle",
            ScenarioKind::CrossingWalker => "crossing_walker",
            ScenarioKind::RedLight => "red_light",
            ScenarioKind::StopSign => "stop_sign",
            ScenarioKind::StaticObstacleSwerve => "static_obstacle_swerve",
            ScenarioKind::MergeFromLeft => "merge_from_left",
            ScenarioKind::MergeFromRight => "merge_from_right",
            ScenarioKind::OncomingVehicle => "oncoming_vehicle",
            ScenarioKind::OpeningDoor => "opening_door",
        }
    }

    /// Default value of the scenario's distance parameter, meters.
    ///
    /// Red light / stop sign: depth of the intersection past the stop line.
    /// Everything else: how far past the trigger point the actor or conflict sits.
    pub fn nominal_distance(self) -> f64 {
        match self {
            ScenarioKind::LeadVehicle => 30.0,
            ScenarioKind::CrossingWalker => 30.0,
            ScenarioKind::RedLight | ScenarioKind::StopSign => 15.0,
            ScenarioKind::StaticObstacleSwerve => 35.0,
            ScenarioKind::MergeFromLeft | ScenarioKind::MergeFromRight => 45.0,
            ScenarioKind::OncomingVehicle => 40.0,
            ScenarioKind::OpeningDoor => 35.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Arc length along the route at which the scenario starts.
    pub trigger_distance: f64,
    /// Nominal scenario geometry, perturbed by ±10% when built.
    pub distance_param: f64,
    pub seed: u64,
}

/// A spec together with the perturbed distance actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub spec: ScenarioSpec,
    pub distance: f64,
}

const VEHICLE_HALF: (f64, f64) = (2.45, 1.05);
const WALKER_HALF: f64 = 0.3;
const LANE_OFFSET: f64 = 3.5;

/// Builds a world for one scenario on `route`.
pub fn build_scenario(spec: &ScenarioSpec, route: &Polyline, rng_seed: u64, config: &SimConfig, speed_limit: f64) -> Result<WorldState> {
    build_scenarios(core::slice::from_ref(spec), route, rng_seed, config, speed_limit, 200.0)
}

/// Builds a world with any number of scenarios on `route`. Deterministic in
/// `(specs, route, rng_seed)`.
pub fn build_scenarios(
    specs: &[ScenarioSpec],
    route: &Polyline,
    rng_seed: u64,
    config: &SimConfig,
    speed_limit: f64,
    target_spacing: f64,
) -> Result<WorldState> {
    config.validate()?;
    if !(speed_limit > 0.0) {
        return Err(Error::InvalidConfig("speed limit must be positive".into()));
    }
    let len = route.length();
    let mut instances = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        if !(spec.trigger_distance >= 0.0 && spec.trigger_distance <= len) {
            return Err(Error::InvalidSpec(format!(
                "{} trigger at {:.1} m lies outside the {:.1} m route",
                spec.kind.as_str(),
                spec.trigger_distance,
                len
            )));
        }
        if !(spec.distance_param > 0.0 && spec.distance_param.is_finite()) {
            return Err(Error::InvalidSpec(format!("{} distance_param must be positive", spec.kind.as_str())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let factor: f64 = rng.random_range(0.9..=1.1);
        instances.push(ScenarioInstance { spec: *spec, distance: spec.distance_param * factor });
    }

    let mut map = MapFeatures::new(route.clone(), speed_limit, target_spacing);
    let mut actors = Vec::new();
    let plan = map.plan_route.clone();
    let mut next_id = 1u32;
    let mut id = || {
        let v = next_id;
        next_id += 1;
        v
    };

    for inst in &instances {
        let t = inst.spec.trigger_distance;
        let dist = inst.distance;
        match inst.spec.kind {
            ScenarioKind::RedLight => {
                let arrival = t / speed_limit + speed_limit / 2.0;
                let red_until = ((arrival + 6.0) / config.sim_dt).ceil() as u64;
                map.traffic_lights.push(TrafficLight { route_s: t, position: plan.point_at(t), red_until_tick: red_until });
                map.intersections.push(Polygon::corridor(&plan, t, t + dist, 8.0));
            }
            ScenarioKind::StopSign => {
                map.stop_signs.push(StopSign {
                    route_s: t,
                    position: plan.point_at(t),
                    zone: Polygon::corridor(&plan, (t - 12.0).max(0.0), t, 4.0),
                });
                map.intersections.push(Polygon::corridor(&plan, t, t + dist, 8.0));
            }
            ScenarioKind::StaticObstacleSwerve => {
                actors.push(Actor {
                    id: id(),
                    kind: ActorKind::Static,
                    pose: plan.pose_at(t + dist),
                    speed: 0.0,
                    half_length: 2.0,
                    half_width: 1.0,
                    present: true,
                    script: ActorScript::Fixed,
                });
            }
            ScenarioKind::OpeningDoor => {
                let s = t + dist;
                let yaw = plan.heading_at(s);
                let car = plan.offset_point(s, -2.8);
                actors.push(Actor {
                    id: id(),
                    kind: ActorKind::Static,
                    pose: Pose2D::new(car.x, car.y, yaw),
                    speed: 0.0,
                    half_length: VEHICLE_HALF.0,
                    half_width: VEHICLE_HALF.1,
                    present: true,
                    script: ActorScript::Fixed,
                });
                let door = plan.offset_point(s + 0.8, -1.3);
                actors.push(Actor {
                    id: id(),
                    kind: ActorKind::Static,
                    pose: Pose2D::new(door.x, door.y, yaw),
                    speed: 0.0,
                    half_length: 0.5,
                    half_width: 0.45,
                    present: false,
                    script: ActorScript::AppearAt { route_s: t },
                });
            }
            ScenarioKind::CrossingWalker => {
                let s = t + dist;
                let start = plan.offset_point(s, -6.0);
                let dir = Vec2::from_angle(plan.heading_at(s) + FRAC_PI_2);
                actors.push(Actor {
                    id: id(),
                    kind: ActorKind::Walker,
                    pose: Pose2D::new(start.x, start.y, dir.angle()),
                    speed: 0.0,
                    half_length: WALKER_HALF,
                    half_width: WALKER_HALF,
                    present: true,
                    script: ActorScript::Walk(WalkScript {
                        start_at_route_s: t,
                        direction: dir,
                        walk_speed: 1.4,
                        walk_distance: 12.0,
                        walked: 0.0,
                        started: false,
                    }),
                });
            }
            ScenarioKind::LeadVehicle => {
                let center = t + dist + VEHICLE_HALF.0;
                let path = Arc::new(plan.slice(center, plan.length())?);
                actors.push(driving_actor(id(), path, 0.0, t, 5.0, Some(6.0), config));
            }
            ScenarioKind::MergeFromLeft | ScenarioKind::MergeFromRight => {
                let side = if inst.spec.kind == ScenarioKind::MergeFromLeft { 1.0 } else { -1.0 };
                let merge_s = t + dist;
                let mut pts = Vec::new();
                let mut s = merge_s - 40.0;
                while s < merge_s {
                    let w = if s < merge_s - 20.0 { 1.0 } else { 0.5 * (1.0 + (core::f64::consts::PI * (s - (merge_s - 20.0)) / 20.0).cos()) };
                    pts.push(plan.offset_point(s, side * LANE_OFFSET * w));
                    s += 1.0;
                }
                let tail = plan.slice(merge_s, plan.length())?;
                pts.extend_from_slice(tail.points());
                let path = Arc::new(Polyline::new(pts)?);
                actors.push(driving_actor(id(), path, 20.0, t, 6.0, None, config));
            }
            ScenarioKind::OncomingVehicle => {
                let sc = t + dist;
                let o = plan.point_at(sc);
                let tan = Vec2::from_angle(plan.heading_at(sc));
                let nrm = tan.perp();
                let local = |u: f64, v: f64| o + tan * u + nrm * v;
                let (u0, radius) = (3.0, 6.0);
                let mut pts = Vec::new();
                let mut u = u0 + 8.0;
                while u > u0 {
                    pts.push(local(u, LANE_OFFSET));
                    u -= 1.0;
                }
                for k in 0..=24 {
                    let th = FRAC_PI_2 + FRAC_PI_2 * k as f64 / 24.0;
                    pts.push(local(u0 + radius * th.cos(), LANE_OFFSET - radius + radius * th.sin()));
                }
                let mut v = LANE_OFFSET - radius - 1.0;
                while v > -60.0 {
                    pts.push(local(u0 - radius, v));
                    v -= 1.0;
                }
                let path = Arc::new(Polyline::new(pts)?);
                actors.push(driving_actor(id(), path, 0.0, t, 5.0, None, config));
            }
        }
    }

    let mut world = WorldState::new(map, config.clone());
    world.monitor = InfractionMonitor::new(&world.map, &world.ego);
    world.actors = actors;
    world.scenarios = instances;
    Ok(world)
}

fn driving_actor(id: u32, path: Arc<Polyline>, s: f64, start_at: f64, speed: f64, halt_after: Option<f64>, config: &SimConfig) -> Actor {
    let _ = config;
    Actor {
        id,
        kind: ActorKind::Vehicle,
        pose: path.pose_at(s),
        speed: 0.0,
        half_length: VEHICLE_HALF.0,
        half_width: VEHICLE_HALF.1,
        present: true,
        script: ActorScript::Drive(DriveScript {
            path,
            s,
            desired_speed: speed,
            start_speed: speed,
            idm: IdmParams::default(),
            start_at_route_s: start_at,
            started: false,
            halt_after,
            halt_duration: 3.0,
            elapsed: 0.0,
        }),
    }
}
