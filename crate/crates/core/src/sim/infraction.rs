use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ActorKind, MapFeatures, VehicleState, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfractionKind {
    CollisionPedestrian,
    CollisionVehicle,
    CollisionStatic,
    RedLight,
    StopSign,
    RouteDeviation,
    AgentBlocked,
}

impl InfractionKind {
    pub const ALL: [InfractionKind; 7] = [
        InfractionKind::CollisionPedestrian,
        InfractionKind::CollisionVehicle,
        InfractionKind::CollisionStatic,
        InfractionKind::RedLight,
        InfractionKind::StopSign,
        InfractionKind::RouteDeviation,
        InfractionKind::AgentBlocked,
    ];

    /// Terminal infractions end the episode.
    pub fn is_terminal(self) -> bool {
        matches!(self, InfractionKind::RouteDeviation | InfractionKind::AgentBlocked)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InfractionKind::CollisionPedestrian => "collision_pedestrian",
            InfractionKind::CollisionVehicle => "collision_vehicle",
            InfractionKind::CollisionStatic => "collision_static",
            InfractionKind::RedLight => "red_light",
            InfractionKind::StopSign => "stop_sign",
            InfractionKind::RouteDeviation => "route_deviation",
            InfractionKind::AgentBlocked => "agent_blocked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfractionEvent {
    pub kind: InfractionKind,
    pub tick: u64,
    pub route_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StopZoneState {
    pub inside: bool,
    pub satisfied: bool,
    /// Time spent at a standstill inside the zone, s.
    #[serde(default)]
    pub stopped_for: f64,
}

/// Memory needed to report each infraction once per contact episode.
#[derive(Debug, Clone, PartialEq)]
pub struct InfractionMonitor {
    contacts: Vec<u32>,
    prev_front_s: f64,
    pub stop_zones: Vec<StopZoneState>,
    blocked_time: f64,
    pub terminated: Option<super::InfractionKind>,
}

impl InfractionMonitor {
    pub fn new(map: &MapFeatures, ego: &VehicleState) -> Self {
        Self {
            contacts: Vec::new(),
            prev_front_s: map.route.project(ego.front_point()).s,
            stop_zones: alloc::vec![StopZoneState::default(); map.stop_signs.len()],
            blocked_time: 0.0,
            terminated: None,
        }
    }
}

/// Checks the current state against the previous one and returns new events.
/// Updates the monitor so a persisting condition is reported once.
pub fn detect_infractions(world: &mut WorldState) -> Vec<InfractionEvent> {
    let mut events = Vec::new();
    let tick = world.tick;
    let route_s = world.ego_route_s;
    let cfg = world.config.clone();
    let map = world.map.clone();
    let ego = world.ego;
    let ego_box = ego.footprint();
    let mon = &mut world.monitor;

    let event = |kind, actor| InfractionEvent { kind, tick, route_s, actor };

    for actor in &world.actors {
        let touching = actor.present && ego_box.overlaps(&actor.footprint());
        let known = mon.contacts.iter().position(|&id| id == actor.id);
        match (touching, known) {
            (true, None) => {
                mon.contacts.push(actor.id);
                let kind = match actor.kind {
                    ActorKind::Walker => InfractionKind::CollisionPedestrian,
                    ActorKind::Vehicle => InfractionKind::CollisionVehicle,
                    ActorKind::Static => InfractionKind::CollisionStatic,
                };
                events.push(event(kind, Some(actor.id)));
            }
            (false, Some(i)) => {
                mon.contacts.swap_remove(i);
            }
            _ => {}
        }
    }

    let front = ego.front_point();
    let front_s = map.route.project(front).s;
    for light in &map.traffic_lights {
        if mon.prev_front_s < light.route_s && front_s >= light.route_s && light.is_red(tick) {
            events.push(event(InfractionKind::RedLight, None));
        }
    }
    mon.prev_front_s = front_s;

    for (sign, state) in map.stop_signs.iter().zip(mon.stop_zones.iter_mut()) {
        let inside = sign.zone.contains(front);
        if inside && ego.speed < cfg.stop_speed {
            state.satisfied = true;
            state.stopped_for += cfg.sim_dt;
        }
        if state.inside && !inside && !state.satisfied {
            events.push(event(InfractionKind::StopSign, None));
            // One report per zone.
            state.satisfied = true;
        }
        state.inside = inside;
    }

    if mon.terminated.is_none() {
        let d = map.route.project(ego.pose.position()).d;
        if d.abs() > cfg.route_deviation_m {
            events.push(event(InfractionKind::RouteDeviation, None));
            mon.terminated = Some(InfractionKind::RouteDeviation);
        }
    }

    let waiting_at_red = map.traffic_lights.iter().any(|l| {
        let gap = l.route_s - front_s;
        l.is_red(tick) && (-1.0..=20.0).contains(&gap)
    });
    if ego.speed < cfg.stop_speed && !waiting_at_red {
        mon.blocked_time += world.sim_dt;
    } else {
        mon.blocked_time = 0.0;
    }
    if mon.terminated.is_none() && mon.blocked_time > cfg.blocked_timeout_s {
        events.push(event(InfractionKind::AgentBlocked, None));
        mon.terminated = Some(InfractionKind::AgentBlocked);
    }

    events
}
