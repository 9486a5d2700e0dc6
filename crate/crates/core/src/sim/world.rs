use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{detect_infractions, step_vehicle, ControlCommand, InfractionEvent, InfractionMonitor, ScenarioInstance, SimConfig, VehicleState};
use crate::expert::idm::{idm_acceleration, IdmParams};
use crate::expert::{Hazard, HazardKind, SourceDirection};
use crate::geometry::{OrientedBox, Polygon, Polyline, Pose2D, Vec2};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorKind {
    Vehicle,
    Walker,
    Static,
}

/// A scripted participant. `pose` is the footprint center.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub id: u32,
    pub kind: ActorKind,
    pub pose: Pose2D,
    pub speed: f64,
    pub half_length: f64,
    pub half_width: f64,
    /// Absent actors are invisible to collisions and to the expert.
    pub present: bool,
    pub script: ActorScript,
}

impl Actor {
    pub fn footprint(&self) -> OrientedBox {
        OrientedBox { center: self.pose.position(), yaw: self.pose.yaw, half_length: self.half_length, half_width: self.half_width }
    }

    pub fn velocity(&self) -> Vec2 {
        match &self.script {
            ActorScript::Walk(w) => w.direction * self.speed,
            _ => self.pose.heading() * self.speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ActorScript {
    Fixed,
    /// Becomes present once the ego reaches `route_s` (an opening door).
    AppearAt { route_s: f64 },
    Walk(WalkScript),
    Drive(DriveScript),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkScript {
    pub start_at_route_s: f64,
    /// Unit direction of travel.
    pub direction: Vec2,
    pub walk_speed: f64,
    pub walk_distance: f64,
    pub walked: f64,
    pub started: bool,
}

impl WalkScript {
    pub fn remaining(&self) -> f64 {
        (self.walk_distance - self.walked).max(0.0)
    }
}

/// A vehicle following its own path with IDM car-following.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveScript {
    pub path: Arc<Polyline>,
    pub s: f64,
    pub desired_speed: f64,
    pub start_speed: f64,
    pub idm: IdmParams,
    pub start_at_route_s: f64,
    pub started: bool,
    /// Brake to a halt this many seconds after starting, for `halt_duration`.
    pub halt_after: Option<f64>,
    pub halt_duration: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLight {
    pub route_s: f64,
    pub position: Vec2,
    /// Red for ticks `< red_until_tick`, green afterwards.
    pub red_until_tick: u64,
}

impl TrafficLight {
    pub fn is_red(&self, tick: u64) -> bool {
        tick < self.red_until_tick
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSign {
    pub route_s: f64,
    pub position: Vec2,
    /// Area in which the ego front bumper has to come to a stop.
    pub zone: Polygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub route_s: f64,
    pub point: Vec2,
}

/// Static map content shared by every copy of a world.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFeatures {
    pub route: Polyline,
    /// The route continued straight past its end so plans never run short.
    pub plan_route: Polyline,
    pub plan_curvature: Vec<f64>,
    pub speed_limit: f64,
    pub target_points: Vec<TargetPoint>,
    pub traffic_lights: Vec<TrafficLight>,
    pub stop_signs: Vec<StopSign>,
    pub intersections: Vec<Polygon>,
}

impl MapFeatures {
    pub const PLAN_EXTENSION_M: f64 = 200.0;

    pub fn new(route: Polyline, speed_limit: f64, target_spacing: f64) -> Self {
        let plan_route = route.extended(Self::PLAN_EXTENSION_M);
        let plan_curvature = plan_route.vertex_curvature();
        let len = route.length();
        let mut target_points = Vec::new();
        let mut s = target_spacing;
        while s < len - 1e-9 {
            target_points.push(TargetPoint { route_s: s, point: route.point_at(s) });
            s += target_spacing;
        }
        target_points.push(TargetPoint { route_s: len, point: route.end() });
        Self {
            route,
            plan_route,
            plan_curvature,
            speed_limit,
            target_points,
            traffic_lights: Vec::new(),
            stop_signs: Vec::new(),
            intersections: Vec::new(),
        }
    }

    pub fn in_intersection(&self, footprint: &OrientedBox) -> bool {
        let mut probes = [Vec2::ZERO; 5];
        probes[..4].copy_from_slice(&footprint.corners());
        probes[4] = footprint.center;
        self.intersections.iter().any(|z| probes.iter().any(|p| z.contains(*p)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    pub sim_dt: f64,
    pub ego: VehicleState,
    pub actors: Vec<Actor>,
    pub map: Arc<MapFeatures>,
    pub config: Arc<SimConfig>,
    pub monitor: InfractionMonitor,
    /// Arc length of the ego rear axle projected on the route.
    pub ego_route_s: f64,
    pub scenarios: Vec<ScenarioInstance>,
}

impl WorldState {
    /// A world with the ego at rest at the start of the route.
    pub fn new(map: MapFeatures, config: SimConfig) -> Self {
        let pose = map.route.pose_at(0.0);
        let ego = VehicleState::new(pose, 0.0, &config.vehicle);
        let monitor = InfractionMonitor::new(&map, &ego);
        Self {
            tick: 0,
            sim_dt: config.sim_dt,
            ego,
            actors: Vec::new(),
            map: Arc::new(map),
            config: Arc::new(config),
            monitor,
            ego_route_s: 0.0,
            scenarios: Vec::new(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.tick as f64 * self.sim_dt
    }

    pub fn next_actor_id(&self) -> u32 {
        self.actors.iter().map(|a| a.id + 1).max().unwrap_or(1)
    }

    pub fn set_ego(&mut self, ego: VehicleState) {
        self.ego = ego;
        self.ego_route_s = self.map.route.project(ego.pose.position()).s;
        self.monitor = InfractionMonitor::new(&self.map, &self.ego);
    }

    pub fn is_terminated(&self) -> bool {
        self.monitor.terminated.is_some()
    }

    /// Advance one tick: ego kinematics, actor scripts, then infraction checks.
    pub fn step(&mut self, cmd: ControlCommand) -> Result<Vec<InfractionEvent>> {
        let dt = self.sim_dt;
        self.ego = step_vehicle(&self.ego, cmd.accel, cmd.steer, dt, self.config.vehicle.max_steer)?;
        self.ego_route_s = self.map.route.project(self.ego.pose.position()).s;
        self.step_actors(dt);
        self.tick += 1;
        Ok(detect_infractions(self))
    }

    fn step_actors(&mut self, dt: f64) {
        let ego_s = self.ego_route_s;
        for i in 0..self.actors.len() {
            let accel = match &self.actors[i].script {
                ActorScript::Drive(d) if d.started && self.actors[i].present => Some(self.scripted_vehicle_accel(i, d)),
                _ => None,
            };
            let actor = &mut self.actors[i];
            match &mut actor.script {
                ActorScript::Fixed => {}
                ActorScript::AppearAt { route_s } => {
                    if !actor.present && ego_s >= *route_s {
                        actor.present = true;
                    }
                }
                ActorScript::Walk(w) => {
                    if !w.started && ego_s >= w.start_at_route_s {
                        w.started = true;
                        actor.speed = w.walk_speed;
                    }
                    if w.started && actor.speed > 0.0 {
                        let step = (actor.speed * dt).min(w.remaining());
                        let p = actor.pose.position() + w.direction * step;
                        actor.pose.x = p.x;
                        actor.pose.y = p.y;
                        w.walked += step;
                        if w.remaining() <= 0.0 {
                            actor.speed = 0.0;
                        }
                    }
                }
                ActorScript::Drive(d) => {
                    if !actor.present {
                        continue;
                    }
                    if !d.started {
                        if ego_s >= d.start_at_route_s {
                            d.started = true;
                            actor.speed = d.start_speed;
                        }
                        continue;
                    }
                    let a = accel.unwrap_or(0.0);
                    let v = actor.speed;
                    d.s += v * dt;
                    actor.speed = (v + a * dt).max(0.0);
                    d.elapsed += dt;
                    if d.s >= d.path.length() {
                        actor.present = false;
                        actor.speed = 0.0;
                        continue;
                    }
                    let p = d.path.pose_at(d.s);
                    actor.pose = p;
                }
            }
        }
    }

    fn scripted_vehicle_accel(&self, index: usize, d: &DriveScript) -> f64 {
        let me = &self.actors[index];
        if let Some(t0) = d.halt_after {
            if d.elapsed >= t0 && d.elapsed < t0 + d.halt_duration {
                return if me.speed > 0.0 { -(me.speed / self.sim_dt).min(3.0) } else { 0.0 };
            }
        }
        // Nearest body ahead on the scripted path, ego included.
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |center: Vec2, hl: f64, hw: f64, vel: Vec2| {
            let proj = d.path.project(center);
            let ds = proj.s - d.s;
            if ds <= 0.0 || ds > 60.0 || proj.d.abs() > me.half_width + hw + 0.3 {
                return;
            }
            let gap = ds - me.half_length - hl;
            let along = vel.dot(d.path.pose_at(proj.s).heading());
            if best.map_or(true, |(g, _)| gap < g) {
                best = Some((gap, along));
            }
        };
        let ego_box = self.ego.footprint();
        consider(ego_box.center, ego_box.half_length, ego_box.half_width, self.ego.pose.heading() * self.ego.speed);
        for (j, other) in self.actors.iter().enumerate() {
            if j != index && other.present {
                consider(other.pose.position(), other.half_length, other.half_width, other.velocity());
            }
        }
        let hazard = match best {
            Some((gap, along)) => Hazard {
                kind: HazardKind::LeadingVehicle,
                gap: gap.max(0.0),
                closing_speed: me.speed - along,
                source_direction: SourceDirection::Front,
                actor: None,
            },
            None => Hazard::none(),
        };
        let params = IdmParams { v0: d.desired_speed, ..d.idm };
        idm_acceleration(me.speed, &hazard, &params)
    }
}
