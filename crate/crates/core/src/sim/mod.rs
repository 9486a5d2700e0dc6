//! Fixed-tick kinematic world: ego vehicle, scripted actors, map features and
//! infraction detection.

mod infraction;
mod scenario;
mod world;

pub use infraction::{detect_infractions, InfractionEvent, InfractionKind, InfractionMonitor, StopZoneState};
pub use scenario::{build_scenario, build_scenarios, ScenarioInstance, ScenarioKind, ScenarioSpec};
pub use world::{
    Actor, ActorKind, ActorScript, DriveScript, MapFeatures, StopSign, TargetPoint, TrafficLight, WalkScript,
    WorldState,
};

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, OrientedBox, Pose2D, Vec2};
use crate::{Error, Result};

/// Actuation applied for one tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    /// Front-wheel angle, radians, positive turns left.
    pub steer: f64,
    /// m/s², negative brakes.
    pub accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    pub max_steer: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { wheelbase: 2.9, length: 4.9, width: 2.1, max_steer: 1.22 }
    }
}

impl VehicleParams {
    /// Distance from the rear axle to the front bumper.
    pub fn front_overhang(&self) -> f64 {
        0.5 * self.wheelbase + 0.5 * self.length
    }

    /// Distance from the rear axle back to the rear bumper.
    pub fn rear_overhang(&self) -> f64 {
        0.5 * self.length - 0.5 * self.wheelbase
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sim_dt: f64,
    /// Recording keeps every n-th tick (4 at 20 Hz gives 5 fps).
    pub record_every: u32,
    pub stop_speed: f64,
    pub route_deviation_m: f64,
    pub blocked_timeout_s: f64,
    pub max_episode_s: f64,
    pub vehicle: VehicleParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim_dt: 0.05,
            record_every: 4,
            stop_speed: 0.1,
            route_deviation_m: 30.0,
            blocked_timeout_s: 90.0,
            max_episode_s: 300.0,
            vehicle: VehicleParams::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let v = &self.vehicle;
        let ok = self.sim_dt > 0.0
            && self.record_every > 0
            && self.stop_speed > 0.0
            && self.route_deviation_m > 0.0
            && self.blocked_timeout_s > 0.0
            && self.max_episode_s > 0.0
            && v.wheelbase > 0.0
            && v.length >= v.wheelbase
            && v.width > 0.0
            && v.max_steer > 0.0
            && v.max_steer < core::f64::consts::FRAC_PI_2;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("simulation parameters out of range".into()))
        }
    }
}

/// Ego vehicle state; `pose` is the rear-axle reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub pose: Pose2D,
    pub speed: f64,
    pub wheelbase: f64,
    /// (length / 2, width / 2)
    pub half_extents: (f64, f64),
}

impl VehicleState {
    pub fn new(pose: Pose2D, speed: f64, params: &VehicleParams) -> Self {
        Self { pose, speed, wheelbase: params.wheelbase, half_extents: (0.5 * params.length, 0.5 * params.width) }
    }

    pub fn footprint(&self) -> OrientedBox {
        OrientedBox {
            center: self.pose.transform_point(Vec2::new(0.5 * self.wheelbase, 0.0)),
            yaw: self.pose.yaw,
            half_length: self.half_extents.0,
            half_width: self.half_extents.1,
        }
    }

    /// Center of the front bumper.
    pub fn front_point(&self) -> Vec2 {
        self.pose.transform_point(Vec2::new(0.5 * self.wheelbase + self.half_extents.0, 0.0))
    }
}

/// Kinematic bicycle step about the rear axle. The arc for the tick is
/// integrated exactly at the speed held at the start of the tick; steering
/// beyond `max_steer` is clamped.
pub fn step_vehicle(state: &VehicleState, accel: f64, steer: f64, dt: f64, max_steer: f64) -> Result<VehicleState> {
    if !(accel.is_finite() && steer.is_finite() && dt.is_finite() && state.pose.is_finite() && state.speed.is_finite()) {
        return Err(Error::InvalidInput("non-finite vehicle step input".into()));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let steer = steer.clamp(-max_steer, max_steer);
    let v = state.speed;
    let yaw = state.pose.yaw;
    let omega = v / state.wheelbase * steer.tan();
    let dyaw = omega * dt;
    let (dx, dy) = if dyaw.abs() < 1e-9 {
        (v * yaw.cos() * dt, v * yaw.sin() * dt)
    } else {
        let r = v / omega;
        (r * ((yaw + dyaw).sin() - yaw.sin()), r * (yaw.cos() - (yaw + dyaw).cos()))
    };
    Ok(VehicleState {
        pose: Pose2D { x: state.pose.x + dx, y: state.pose.y + dy, yaw: normalize_angle(yaw + dyaw) },
        speed: (v + accel * dt).max(0.0),
        ..*state
    })
}
