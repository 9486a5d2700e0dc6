//! Privileged rule-based expert: IDM longitudinal control, pure-pursuit
//! steering along a planned path, and label generation.

mod commentary;
mod hazard;
pub mod idm;
mod planner;

pub use commentary::generate_commentary;
pub use hazard::{classify_direction, corridor_half_width, hazard_lookahead, segment_band_entry, select_leading_object};
pub use idm::{idm_acceleration, IdmParams};
pub use planner::{plan_path, Plan, SwerveRegion};

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Vec2};
use crate::sim::{ControlCommand, WorldState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    LeadingVehicle,
    Walker,
    RedLight,
    StopSign,
    None,
}

impl HazardKind {
    pub fn describe(self) -> &'static str {
        match self {
            HazardKind::LeadingVehicle => "leading vehicle",
            HazardKind::Walker => "walker",
            HazardKind::RedLight => "red light",
            HazardKind::StopSign => "stop sign",
            HazardKind::None => "nothing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceDirection {
    Front,
    Left,
    Right,
    Oncoming,
}

/// The object the expert is reacting to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub kind: HazardKind,
    /// Free distance along the path from the ego front bumper, m.
    pub gap: f64,
    pub closing_speed: f64,
    pub source_direction: SourceDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<u32>,
}

impl Hazard {
    pub fn none() -> Self {
        Self { kind: HazardKind::None, gap: 0.0, closing_speed: 0.0, source_direction: SourceDirection::Front, actor: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointSource {
    /// Unroll the expert on a private copy of the world.
    #[default]
    Rollout,
    /// Fill from the recorded trajectory after the episode.
    RecordedFuture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertConfig {
    pub idm: IdmParams,
    pub path_points: usize,
    pub path_spacing: f64,
    pub waypoints: usize,
    pub waypoint_dt: f64,
    pub waypoint_source: WaypointSource,
    pub corridor_margin: f64,
    pub lookahead_min: f64,
    pub lookahead_time: f64,
    /// Prediction horizon for walkers, s.
    pub walker_horizon: f64,
    pub swerve_clearance: f64,
    pub swerve_max_offset: f64,
    pub swerve_ramp: f64,
    pub swerve_step: f64,
    /// Base distance ahead considered by the planner, m.
    pub plan_horizon: f64,
    /// Standstill time required at a stop sign before moving on, s.
    pub stop_dwell: f64,
    /// Lateral acceleration budget in curves, m/s².
    pub lateral_accel: f64,
    /// Deceleration assumed when slowing for upcoming curves, m/s².
    pub curve_decel: f64,
    pub min_curve_speed: f64,
    pub pursuit_min: f64,
    pub pursuit_max: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            path_points: 20,
            path_spacing: 1.0,
            waypoints: 8,
            waypoint_dt: 0.25,
            waypoint_source: WaypointSource::Rollout,
            corridor_margin: 0.5,
            lookahead_min: 20.0,
            lookahead_time: 4.0,
            walker_horizon: 4.0,
            swerve_clearance: 0.5,
            swerve_max_offset: 3.5,
            swerve_ramp: 15.0,
            swerve_step: 1.0,
            plan_horizon: 60.0,
            stop_dwell: 1.5,
            lateral_accel: 2.0,
            curve_decel: 2.0,
            min_curve_speed: 1.0,
            pursuit_min: 3.0,
            pursuit_max: 10.0,
        }
    }
}

impl ExpertConfig {
    pub fn validate(&self) -> Result<()> {
        self.idm.validate()?;
        let ok = self.path_points >= 2
            && self.path_spacing > 0.0
            && self.waypoints >= 2
            && self.waypoint_dt > 0.0
            && self.corridor_margin >= 0.0
            && self.lookahead_min > 0.0
            && self.lookahead_time >= 0.0
            && self.walker_horizon >= 0.0
            && self.swerve_clearance >= 0.0
            && self.swerve_max_offset > 0.0
            && self.swerve_ramp > 0.0
            && self.swerve_step > 0.0
            && self.plan_horizon > 0.0
            && self.stop_dwell >= 0.0
            && self.lateral_accel > 0.0
            && self.curve_decel > 0.0
            && self.min_curve_speed > 0.0
            && self.pursuit_min > 0.0
            && self.pursuit_max >= self.pursuit_min;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("expert parameters out of range".into()))
        }
    }
}

/// Training labels for one timestep, all points in the ego frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertLabels {
    pub path: Vec<Vec2>,
    pub waypoints: Vec<Vec2>,
    pub commentary: String,
    pub hazard: Hazard,
    pub swerving: bool,
    pub target_points: Vec<Vec2>,
}

/// Everything the expert worked out for the current tick.
#[derive(Debug, Clone)]
pub struct Decision<'a> {
    pub control: ControlCommand,
    pub hazard: Hazard,
    pub plan: Plan<'a>,
    /// Rear-axle arc length on the plan path.
    pub plan_s: f64,
    /// Rear-axle arc length on the extended route.
    pub route_s: f64,
    pub swerving: bool,
    /// Desired speed after the curve cap.
    pub v0: f64,
}

/// Speed cap from upcoming plan curvature: every vertex ahead must be
/// reachable at √(a_lat/κ) with constant deceleration.
pub fn curve_speed_cap(path: &Polyline, s: f64, v_limit: f64, cfg: &ExpertConfig) -> f64 {
    let pts = path.points();
    let cum = path.cumulative_arclength();
    let reach = v_limit * v_limit / (2.0 * cfg.curve_decel) + 5.0;
    let start = cum.partition_point(|&c| c < s - 3.0).max(1);
    let mut cap = v_limit;
    for i in start..pts.len().saturating_sub(1) {
        let dist = (cum[i] - s).max(0.0);
        if dist > reach {
            break;
        }
        let (a, b, c) = (pts[i - 1], pts[i], pts[i + 1]);
        let denom = a.distance(b) * b.distance(c) * a.distance(c);
        if denom <= 1e-12 {
            continue;
        }
        let kappa = 2.0 * (b - a).cross(c - a).abs() / denom;
        if kappa > 1e-9 {
            let v = (cfg.lateral_accel / kappa + 2.0 * cfg.curve_decel * dist).sqrt();
            cap = cap.min(v);
        }
    }
    cap.max(cfg.min_curve_speed.min(v_limit))
}

/// Pure-pursuit steering toward the plan point `ld` ahead of the ego.
fn pure_pursuit(world: &WorldState, path: &Polyline, plan_s: f64, cfg: &ExpertConfig) -> f64 {
    let ego = &world.ego;
    let ld = ego.speed.clamp(cfg.pursuit_min, cfg.pursuit_max);
    let target = ego.pose.inverse_transform_point(path.point_at(plan_s + ld));
    let dist = target.norm();
    if dist < 1e-6 {
        return 0.0;
    }
    let alpha = target.y.atan2(target.x);
    let max_steer = world.config.vehicle.max_steer;
    (2.0 * ego.wheelbase * alpha.sin() / dist).atan().clamp(-max_steer, max_steer)
}

/// Plan, hazard and control for the current tick.
pub fn expert_decide<'a>(world: &'a WorldState, cfg: &ExpertConfig) -> Result<Decision<'a>> {
    let map = &world.map;
    let route = &map.plan_route;
    let pos = world.ego.pose.position();
    let route_s = route.project(pos).s;
    let plan = plan_path(route, world, route_s, cfg)?;
    let plan_s = if plan.swerves.is_empty() { route_s } else { plan.path.project(pos).s };
    let swerving = plan.offset_at(route_s).abs() > 0.1;

    let v_limit = cfg.idm.v0.min(map.speed_limit);
    let v0 = curve_speed_cap(&plan.path, plan_s, v_limit, cfg);
    let hazard = select_leading_object(world, &plan.path, plan_s, cfg);
    let params = IdmParams { v0, ..cfg.idm };
    let accel = idm_acceleration(world.ego.speed, &hazard, &params);
    let steer = pure_pursuit(world, &plan.path, plan_s, cfg);
    Ok(Decision { control: ControlCommand { steer, accel }, hazard, plan, plan_s, route_s, swerving, v0 })
}

/// Control only; used inside rollouts.
pub fn expert_control(world: &WorldState, cfg: &ExpertConfig) -> Result<ControlCommand> {
    Ok(expert_decide(world, cfg)?.control)
}

/// Ego positions at `k·waypoint_dt`, k = 1..=M, from unrolling the expert on
/// a copy of the world, in the current ego frame.
pub fn rollout_waypoints(world: &WorldState, first: ControlCommand, cfg: &ExpertConfig) -> Result<Vec<Vec2>> {
    let frame = world.ego.pose;
    let ticks = (cfg.waypoint_dt / world.sim_dt).round().max(1.0) as usize;
    let mut sim = world.clone();
    let mut cmd = first;
    let mut out = Vec::with_capacity(cfg.waypoints);
    for _ in 0..cfg.waypoints {
        for _ in 0..ticks {
            sim.step(cmd)?;
            cmd = expert_control(&sim, cfg)?;
        }
        out.push(frame.inverse_transform_point(sim.ego.pose.position()));
    }
    Ok(out)
}

/// Next two route target points ahead of the ego, in the ego frame.
pub fn next_target_points(world: &WorldState) -> Vec<Vec2> {
    let tps = &world.map.target_points;
    let s = world.ego_route_s;
    let first = tps.iter().position(|t| t.route_s > s + 1e-9).unwrap_or(tps.len() - 1);
    let second = (first + 1).min(tps.len() - 1);
    [first, second].iter().map(|&i| world.ego.pose.inverse_transform_point(tps[i].point)).collect()
}

/// Labels from a decision. Waypoints are left empty for the recorded-future
/// mode and filled by the episode recorder.
pub fn labels_for(world: &WorldState, decision: &Decision<'_>, cfg: &ExpertConfig) -> Result<ExpertLabels> {
    let frame = world.ego.pose;
    let path = (1..=cfg.path_points)
        .map(|k| frame.inverse_transform_point(decision.plan.path.point_at(decision.plan_s + k as f64 * cfg.path_spacing)))
        .collect();
    let waypoints = match cfg.waypoint_source {
        WaypointSource::Rollout => rollout_waypoints(world, decision.control, cfg)?,
        WaypointSource::RecordedFuture => Vec::new(),
    };
    Ok(ExpertLabels {
        path,
        waypoints,
        commentary: generate_commentary(&decision.hazard, decision.swerving, world.ego.speed, decision.control.accel),
        hazard: decision.hazard,
        swerving: decision.swerving,
        target_points: next_target_points(world),
    })
}

/// Control and labels for the current tick.
pub fn expert_act(world: &WorldState, cfg: &ExpertConfig) -> Result<(ControlCommand, ExpertLabels)> {
    let decision = expert_decide(world, cfg)?;
    let labels = labels_for(world, &decision, cfg)?;
    Ok((decision.control, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::sim::{MapFeatures, SimConfig, TrafficLight, VehicleState};
    use alloc::vec;

    fn straight_world(speed: f64) -> WorldState {
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(400.0, 0.0)]).unwrap();
        let mut w = WorldState::new(MapFeatures::new(route, 8.3, 200.0), SimConfig::default());
        let ego = VehicleState::new(Pose2D::new(20.0, 0.0, 0.0), speed, &w.config.vehicle);
        w.set_ego(ego);
        w
    }

    #[test]
    fn label_shapes_and_spacing() {
        let cfg = ExpertConfig::default();
        let w = straight_world(5.0);
        let (_, labels) = expert_act(&w, &cfg).unwrap();
        assert_eq!(labels.path.len(), cfg.path_points);
        assert_eq!(labels.waypoints.len(), cfg.waypoints);
        assert_eq!(labels.target_points.len(), 2);
        for pair in labels.path.windows(2) {
            assert!((pair[0].distance(pair[1]) - cfg.path_spacing).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_speed_waypoint_gaps() {
        let cfg = ExpertConfig::default();
        let w = straight_world(8.3);
        let (ctl, labels) = expert_act(&w, &cfg).unwrap();
        assert!(ctl.accel.abs() < 1e-12);
        let mut prev = Vec2::ZERO;
        for wp in &labels.waypoints {
            let gap = wp.distance(prev);
            assert!((gap - 8.3 * 0.25).abs() <= 0.02 * 8.3 * 0.25, "gap {gap}");
            prev = *wp;
        }
        assert_eq!(labels.commentary, "keep driving at the same speed");
    }

    #[test]
    fn stopped_at_red_light_collapses_waypoints_but_not_path() {
        let cfg = ExpertConfig::default();
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0), Vec2::new(100.0, 100.0)]).unwrap();
        let mut map = MapFeatures::new(route, 8.3, 200.0);
        map.traffic_lights.push(TrafficLight { route_s: 96.0, position: Vec2::new(96.0, 0.0), red_until_tick: 10_000 });
        let mut w = WorldState::new(map, SimConfig::default());
        let ego = VehicleState::new(Pose2D::new(96.0 - 3.9 - 4.0, 0.0, 0.0), 0.0, &w.config.vehicle);
        w.set_ego(ego);
        let (_, labels) = expert_act(&w, &cfg).unwrap();
        assert!(labels.waypoints.iter().all(|p| p.norm() <= 0.1), "{:?}", labels.waypoints);
        let last = labels.path[cfg.path_points - 1];
        assert!((labels.path[0].norm() - cfg.path_spacing).abs() < 1e-9);
        assert!(last.norm() > 0.5 * cfg.path_points as f64 * cfg.path_spacing);
        // The path bends into the turn even though the car is at rest.
        assert!(last.y > 5.0);
        assert_eq!(labels.commentary, "stopping for red light");
    }

    #[test]
    fn rollout_matches_real_resimulation() {
        let cfg = ExpertConfig::default();
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(60.0, 0.0), Vec2::new(80.0, 10.0), Vec2::new(200.0, 10.0)]).unwrap();
        let mut w = WorldState::new(MapFeatures::new(route, 8.3, 200.0), SimConfig::default());
        for _ in 0..100 {
            let c = expert_control(&w, &cfg).unwrap();
            w.step(c).unwrap();
        }
        let (ctl, labels) = expert_act(&w, &cfg).unwrap();
        let frame = w.ego.pose;
        let mut real = w.clone();
        let mut cmd = ctl;
        let ticks = (cfg.waypoint_dt / real.sim_dt).round() as usize;
        for wp in &labels.waypoints {
            for _ in 0..ticks {
                real.step(cmd).unwrap();
                cmd = expert_act(&real, &cfg).unwrap().0;
            }
            let actual = frame.inverse_transform_point(real.ego.pose.position());
            assert!(actual.distance(*wp) <= 0.05);
        }
    }

    #[test]
    fn curve_cap_slows_for_tight_turns() {
        let cfg = ExpertConfig::default();
        let r = 10.0;
        let mut pts = vec![Vec2::new(-50.0, 0.0)];
        for k in 0..=30 {
            let th = core::f64::consts::FRAC_PI_2 * k as f64 / 30.0;
            pts.push(Vec2::new(r * th.sin(), r - r * th.cos()));
        }
        let line = Polyline::new(pts).unwrap();
        // Inside the arc the nearest vertex ahead is at most one arc step away.
        let step = r * core::f64::consts::FRAC_PI_2 / 30.0;
        let at_turn = curve_speed_cap(&line, 57.0, 8.3, &cfg);
        assert!(at_turn >= (2.0 * r).sqrt() * 0.99 && at_turn <= (2.0 * r + 4.0 * step).sqrt(), "{at_turn}");
        let far = curve_speed_cap(&line, 0.0, 8.3, &cfg);
        assert_eq!(far, 8.3);
    }
}
