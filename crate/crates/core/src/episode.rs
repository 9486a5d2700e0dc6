//! Closed-loop episode runner.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::control::{early_stop_filter, ControllerConfig, DrivingOutput, EntangledController, SemiDisentangledController, StopDecision, StopPolicy};
use crate::data::{HazardFlags, SampleRecord};
use crate::expert::{expert_decide, labels_for, ExpertConfig, ExpertLabels, WaypointSource};
use crate::geometry::{Polyline, Pose2D};
use crate::metrics::{driving_score, infraction_score, route_completion, EpisodeResult, PenaltyTable};
use crate::sim::{build_scenarios, Actor, ActorKind, ActorScript, ScenarioSpec, SimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Steering from the path, speed from the waypoints.
    SemiDisentangled,
    /// Steering and speed both from the waypoints.
    Entangled,
    /// The expert's own command.
    ExpertDirect,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::SemiDisentangled, ControllerKind::Entangled, ControllerKind::ExpertDirect];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::SemiDisentangled => "semi-disentangled",
            ControllerKind::Entangled => "entangled",
            ControllerKind::ExpertDirect => "expert-direct",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi-disentangled" | "semi" => Ok(ControllerKind::SemiDisentangled),
            "entangled" => Ok(ControllerKind::Entangled),
            "expert-direct" | "expert" => Ok(ControllerKind::ExpertDirect),
            other => Err(Error::InvalidConfig(alloc::format!("unknown controller '{other}'"))),
        }
    }
}

/// Fixed box placed in the world independent of any scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticProp {
    pub pose: Pose2D,
    pub half_length: f64,
    pub half_width: f64,
}

/// Everything needed to reproduce one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    pub route: Polyline,
    pub speed_limit: f64,
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default)]
    pub props: Vec<StaticProp>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub expert: ExpertConfig,
    pub controller: ControllerConfig,
    pub penalties: PenaltyTable,
    pub target_spacing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<StopPolicy>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            expert: ExpertConfig::default(),
            controller: ControllerConfig::default(),
            penalties: PenaltyTable::default(),
            target_spacing: 200.0,
            early_stop: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.expert.validate()?;
        self.controller.validate()?;
        self.penalties.validate()?;
        if !(self.target_spacing > 0.0) {
            return Err(Error::InvalidConfig("target_spacing must be positive".into()));
        }
        if let Some(p) = &self.early_stop {
            if !(p.distance_threshold >= 0.0 && p.steer_epsilon > 0.0) {
                return Err(Error::InvalidConfig("early stop needs threshold >= 0 and steer_epsilon > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub result: EpisodeResult,
    /// Recorded frames, empty unless recording was requested.
    pub records: Vec<SampleRecord>,
    /// Ego pose after every tick, starting with the initial pose.
    pub trace: Vec<Pose2D>,
}

struct Pending {
    tick: u64,
    pose: Pose2D,
    speed: f64,
    steer: f64,
    labels: ExpertLabels,
}

/// Drives one episode to completion.
///
/// The episode ends when the ego reaches the route end, on a terminal
/// infraction, at the time limit, or when the early-stop policy fires.
pub fn run_episode(spec: &EpisodeSpec, kind: ControllerKind, cfg: &RunConfig, record: bool) -> Result<EpisodeOutcome> {
    cfg.validate()?;
    let mut world = build_scenarios(&spec.scenarios, &spec.route, spec.seed, &cfg.sim, spec.speed_limit, cfg.target_spacing)?;
    for prop in &spec.props {
        if !(prop.pose.is_finite() && prop.half_length > 0.0 && prop.half_width > 0.0) {
            return Err(Error::InvalidSpec("static prop needs a finite pose and positive extents".into()));
        }
        let id = world.next_actor_id();
        world.actors.push(Actor {
            id,
            kind: ActorKind::Static,
            pose: prop.pose,
            speed: 0.0,
            half_length: prop.half_length,
            half_width: prop.half_width,
            present: true,
            script: ActorScript::Fixed,
        });
    }

    let dt = world.sim_dt;
    let route_len = spec.route.length();
    let max_ticks = (cfg.sim.max_episode_s / dt).ceil() as u64;
    let record_every = u64::from(cfg.sim.record_every.max(1));
    // Controllers always need predicted waypoints.
    let drive_cfg = if kind != ControllerKind::ExpertDirect && cfg.expert.waypoint_source == WaypointSource::RecordedFuture {
        ExpertConfig { waypoint_source: WaypointSource::Rollout, ..cfg.expert.clone() }
    } else {
        cfg.expert.clone()
    };

    let mut semi = SemiDisentangledController::new(cfg.controller.clone());
    let mut entangled = EntangledController::new(cfg.controller.clone());
    let mut stop_policy = cfg.early_stop;
    let mut trace = alloc::vec![world.ego.pose];
    let mut events = Vec::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut travelled = 0.0;
    let mut max_lateral = 0.0f64;
    let mut stopped_early = false;

    while world.tick < max_ticks {
        let record_now = record && world.tick % record_every == 0;
        let (cmd, labels) = {
            let decision = expert_decide(&world, &cfg.expert)?;
            let pos = world.ego.pose.position();
            max_lateral = max_lateral.max(decision.plan.path.project(pos).d.abs());
            let labels = if kind != ControllerKind::ExpertDirect || record_now {
                let lcfg = if kind == ControllerKind::ExpertDirect { &cfg.expert } else { &drive_cfg };
                Some(labels_for(&world, &decision, lcfg)?)
            } else {
                None
            };
            let speed = world.ego.speed;
            let output = |l: &ExpertLabels| DrivingOutput { path: l.path.clone(), waypoints: l.waypoints.clone(), commentary: None };
            let cmd = match (kind, &labels) {
                (ControllerKind::ExpertDirect, _) => decision.control,
                (ControllerKind::SemiDisentangled, Some(l)) => semi.act(&output(l), speed, dt)?,
                (ControllerKind::Entangled, Some(l)) => entangled.act(&output(l), speed, dt),
                _ => unreachable!("controllers always get labels"),
            };
            (cmd, labels)
        };

        if record_now {
            if let Some(labels) = labels {
                pending.push(Pending { tick: world.tick, pose: world.ego.pose, speed: world.ego.speed, steer: cmd.steer, labels });
            }
        }

        if let Some(policy) = stop_policy.as_mut() {
            let in_intersection = world.map.in_intersection(&world.ego.footprint());
            if early_stop_filter(policy, cmd.steer, travelled, in_intersection) == StopDecision::Stop {
                stopped_early = true;
                break;
            }
        }

        let before = world.ego.pose.position();
        events.extend(world.step(cmd)?);
        travelled += world.ego.pose.position().distance(before);
        trace.push(world.ego.pose);
        if world.is_terminated() || world.ego_route_s >= route_len - 1e-6 {
            break;
        }
    }

    let rc = route_completion(&spec.route, &trace, &events);
    let is_score = infraction_score(&events, &cfg.penalties)?;
    let records = finish_records(spec, pending, &trace, cfg, dt * record_every as f64);
    let result = EpisodeResult {
        route_id: spec.id.clone(),
        controller: String::from(kind.as_str()),
        seed: spec.seed,
        route_length: route_len,
        rc,
        is_score,
        ds: driving_score(rc, is_score),
        events,
        distance_travelled: travelled,
        stopped_early,
        max_lateral_error: max_lateral,
    };
    Ok(EpisodeOutcome { result, records, trace })
}

/// Centered-difference acceleration, flags and, in recorded-future mode,
/// waypoints from the driven trajectory.
fn finish_records(spec: &EpisodeSpec, pending: Vec<Pending>, trace: &[Pose2D], cfg: &RunConfig, record_dt: f64) -> Vec<SampleRecord> {
    let n = pending.len();
    let speeds: Vec<f64> = pending.iter().map(|p| p.speed).collect();
    let step = (cfg.expert.waypoint_dt / cfg.sim.sim_dt).round().max(1.0) as usize;
    let scenario = spec.scenarios.first().map(|s| String::from(s.kind.as_str()));
    pending
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let accel = match n {
                0 | 1 => 0.0,
                _ if i == 0 => (speeds[1] - speeds[0]) / record_dt,
                _ if i == n - 1 => (speeds[n - 1] - speeds[n - 2]) / record_dt,
                _ => (speeds[i + 1] - speeds[i - 1]) / (2.0 * record_dt),
            };
            let mut labels = p.labels;
            if cfg.expert.waypoint_source == WaypointSource::RecordedFuture {
                labels.waypoints = (1..=cfg.expert.waypoints)
                    .map(|k| {
                        let idx = (p.tick as usize + k * step).min(trace.len() - 1);
                        p.pose.inverse_transform_point(trace[idx].position())
                    })
                    .collect();
            }
            SampleRecord {
                route_id: spec.id.clone(),
                scenario: scenario.clone(),
                tick: p.tick,
                sim_time: p.tick as f64 * cfg.sim.sim_dt,
                pose: p.pose,
                speed: p.speed,
                accel,
                steer: p.steer,
                flags: HazardFlags::from_labels(&labels),
                starting_from_stop: p.speed < 0.1 && accel > 0.5,
                labels,
                augmentation: None,
            }
        })
        .collect()
}
