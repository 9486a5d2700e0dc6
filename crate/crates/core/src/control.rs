//! Output representation and the controllers that turn it into actuation.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Vec2};
use crate::sim::ControlCommand;
use crate::{Error, Result};

/// Model output: a space-conditioned path and time-conditioned waypoints,
/// both in the ego frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingOutput {
    pub path: Vec<Vec2>,
    pub waypoints: Vec<Vec2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commentary: Option<String>,
}

impl DrivingOutput {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.path.len() != n || self.waypoints.len() != m {
            return Err(Error::InvalidInput(alloc::format!(
                "expected {n} path points and {m} waypoints, got {} and {}",
                self.path.len(),
                self.waypoints.len()
            )));
        }
        if !self.path.iter().chain(&self.waypoints).all(|p| p.is_finite()) {
            return Err(Error::InvalidInput("non-finite output coordinate".into()));
        }
        Ok(())
    }
}

/// Running sum of displacement vectors.
pub fn cumsum_waypoints(deltas: &[Vec2]) -> Result<Vec<Vec2>> {
    if deltas.is_empty() {
        return Err(Error::InvalidInput("no waypoint deltas".into()));
    }
    if !deltas.iter().all(|d| d.is_finite()) {
        return Err(Error::InvalidInput("non-finite waypoint delta".into()));
    }
    let mut acc = Vec2::ZERO;
    Ok(deltas
        .iter()
        .map(|d| {
            acc = acc + *d;
            acc
        })
        .collect())
}

/// Inverse of [`cumsum_waypoints`].
pub fn diff_waypoints(points: &[Vec2]) -> Vec<Vec2> {
    let mut prev = Vec2::ZERO;
    points
        .iter()
        .map(|p| {
            let d = *p - prev;
            prev = *p;
            d
        })
        .collect()
}

fn mean_sq(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sum();
    sum / (2 * a.len()) as f64
}

/// Mean squared error per coordinate, as (path, waypoints).
pub fn mse_loss(pred: &DrivingOutput, target: &DrivingOutput) -> Result<(f64, f64)> {
    if pred.path.len() != target.path.len() || pred.waypoints.len() != target.waypoints.len() {
        return Err(Error::InvalidInput("prediction and target shapes differ".into()));
    }
    Ok((mean_sq(&pred.path, &target.path), mean_sq(&pred.waypoints, &target.waypoints)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub gains: PidGains,
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub integral_limit: f64,
    pub output_min: f64,
    pub output_max: f64,
}

impl PidState {
    pub fn new(gains: PidGains, integral_limit: f64, output_min: f64, output_max: f64) -> Self {
        Self { gains, integral: 0.0, prev_error: None, integral_limit, output_min, output_max }
    }

    /// One update. No derivative term on the first call.
    pub fn update(&mut self, error: f64, dt: f64) -> f64 {
        self.integral = (self.integral + error * dt).clamp(-self.integral_limit, self.integral_limit);
        let derivative = match self.prev_error {
            Some(prev) if dt > 0.0 => (error - prev) / dt,
            _ => 0.0,
        };
        self.prev_error = Some(error);
        let g = self.gains;
        (g.kp * error + g.ki * self.integral + g.kd * derivative).clamp(self.output_min, self.output_max)
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = None;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub lateral: PidGains,
    pub longitudinal: PidGains,
    pub integral_limit: f64,
    pub lookahead_gain: f64,
    pub lookahead_min: f64,
    pub lookahead_max: f64,
    /// Waypoint segments averaged for the target speed.
    pub speed_segments: usize,
    pub waypoint_dt: f64,
    /// Below this target speed the brake saturates.
    pub stop_speed: f64,
    /// Waypoint norm below which the entangled steering gives up.
    pub collapse_eps: f64,
    pub max_steer: f64,
    pub a_max: f64,
    pub b_emergency: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lateral: PidGains { kp: 1.2, ki: 0.0, kd: 0.3 },
            longitudinal: PidGains { kp: 1.0, ki: 0.05, kd: 0.0 },
            integral_limit: 2.0,
            lookahead_gain: 0.6,
            lookahead_min: 2.4,
            lookahead_max: 10.0,
            speed_segments: 2,
            waypoint_dt: 0.25,
            stop_speed: 0.1,
            collapse_eps: 0.05,
            max_steer: 1.22,
            a_max: 2.0,
            b_emergency: 8.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.integral_limit >= 0.0
            && self.lookahead_gain >= 0.0
            && self.lookahead_min > 0.0
            && self.lookahead_max >= self.lookahead_min
            && self.speed_segments >= 1
            && self.waypoint_dt > 0.0
            && self.stop_speed >= 0.0
            && self.collapse_eps >= 0.0
            && self.max_steer > 0.0
            && self.a_max > 0.0
            && self.b_emergency > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("controller parameters out of range".into()))
        }
    }

    pub fn lateral_pid(&self) -> PidState {
        PidState::new(self.lateral, self.integral_limit, -self.max_steer, self.max_steer)
    }

    pub fn longitudinal_pid(&self) -> PidState {
        PidState::new(self.longitudinal, self.integral_limit, -self.b_emergency, self.a_max)
    }
}

/// Signed bearing from the ego heading to the path point `d_la` ahead of the
/// ego's projection onto the path.
pub fn lateral_error(path: &[Vec2], speed: f64, cfg: &ControllerConfig) -> Result<f64> {
    let line = Polyline::new(path.to_vec()).map_err(|_| Error::PathDegenerate)?;
    let d_la = (cfg.lookahead_gain * speed).clamp(cfg.lookahead_min, cfg.lookahead_max);
    let s = line.project(Vec2::ZERO).s;
    let target = line.point_at(s + d_la);
    if target.norm() < 1e-12 {
        return Ok(0.0);
    }
    Ok(target.y.atan2(target.x))
}

pub fn lateral_pid(output: &DrivingOutput, speed: f64, pid: &mut PidState, cfg: &ControllerConfig, dt: f64) -> Result<f64> {
    let error = lateral_error(&output.path, speed, cfg)?;
    Ok(pid.update(error, dt))
}

/// Mean speed over the first `speed_segments` waypoint gaps.
pub fn target_speed(waypoints: &[Vec2], cfg: &ControllerConfig) -> f64 {
    let k = cfg.speed_segments.min(waypoints.len().saturating_sub(1));
    if k == 0 {
        return 0.0;
    }
    let total: f64 = waypoints.windows(2).take(k).map(|w| w[0].distance(w[1])).sum();
    total / (k as f64 * cfg.waypoint_dt)
}

pub fn longitudinal_pid(output: &DrivingOutput, speed: f64, pid: &mut PidState, cfg: &ControllerConfig, dt: f64) -> f64 {
    longitudinal_from_waypoints(&output.waypoints, speed, pid, cfg, dt)
}

fn longitudinal_from_waypoints(waypoints: &[Vec2], speed: f64, pid: &mut PidState, cfg: &ControllerConfig, dt: f64) -> f64 {
    let target = target_speed(waypoints, cfg);
    if target < cfg.stop_speed {
        pid.reset();
        return -cfg.b_emergency;
    }
    pid.update(target - speed, dt)
}

/// Baseline: steering and speed both from the time-conditioned waypoints.
pub fn entangled_control(waypoints: &[Vec2], speed: f64, lateral: &mut PidState, longitudinal: &mut PidState, cfg: &ControllerConfig, dt: f64) -> ControlCommand {
    let accel = longitudinal_from_waypoints(waypoints, speed, longitudinal, cfg, dt);
    let aim = waypoints.get(1).copied().unwrap_or(Vec2::ZERO);
    let steer = if aim.norm() < cfg.collapse_eps {
        lateral.reset();
        0.0
    } else {
        lateral.update(aim.y.atan2(aim.x), dt)
    };
    ControlCommand { steer, accel }
}

/// Path-driven steering plus waypoint-driven speed.
#[derive(Debug, Clone)]
pub struct SemiDisentangledController {
    pub cfg: ControllerConfig,
    pub lateral: PidState,
    pub longitudinal: PidState,
}

impl SemiDisentangledController {
    pub fn new(cfg: ControllerConfig) -> Self {
        Self { lateral: cfg.lateral_pid(), longitudinal: cfg.longitudinal_pid(), cfg }
    }

    pub fn act(&mut self, output: &DrivingOutput, speed: f64, dt: f64) -> Result<ControlCommand> {
        let steer = lateral_pid(output, speed, &mut self.lateral, &self.cfg, dt)?;
        let accel = longitudinal_pid(output, speed, &mut self.longitudinal, &self.cfg, dt);
        Ok(ControlCommand { steer, accel })
    }
}

#[derive(Debug, Clone)]
pub struct EntangledController {
    pub cfg: ControllerConfig,
    pub lateral: PidState,
    pub longitudinal: PidState,
}

impl EntangledController {
    pub fn new(cfg: ControllerConfig) -> Self {
        Self { lateral: cfg.lateral_pid(), longitudinal: cfg.longitudinal_pid(), cfg }
    }

    pub fn act(&mut self, output: &DrivingOutput, speed: f64, dt: f64) -> ControlCommand {
        entangled_control(&output.waypoints, speed, &mut self.lateral, &mut self.longitudinal, &self.cfg, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopPolicy {
    pub distance_threshold: f64,
    pub steer_epsilon: f64,
    #[serde(default)]
    pub distance_travelled: f64,
    #[serde(default)]
    pub stopped: bool,
}

impl StopPolicy {
    pub const DEFAULT_STEER_EPSILON: f64 = 0.01;

    pub fn new(distance_threshold: f64) -> Self {
        Self { distance_threshold, steer_epsilon: Self::DEFAULT_STEER_EPSILON, distance_travelled: 0.0, stopped: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Decides whether to end the drive here. `travelled` is the distance driven
/// so far; the decision latches.
pub fn early_stop_filter(policy: &mut StopPolicy, steer: f64, travelled: f64, in_intersection: bool) -> StopDecision {
    policy.distance_travelled = policy.distance_travelled.max(travelled);
    if !policy.stopped
        && policy.distance_travelled >= policy.distance_threshold
        && steer.abs() < policy.steer_epsilon
        && !in_intersection
    {
        policy.stopped = true;
    }
    if policy.stopped {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub tiles: u64,
    pub tokens_pre: u64,
    pub tokens_post: u64,
}

/// Tile and token counts for an image split into `tile`-sized crops of
/// `patch`-sized patches.
pub fn compute_token_budget(image_w: u64, image_h: u64, tile: u64, patch: u64, downsample: u64, include_global: bool) -> Result<TokenBudget> {
    if image_w == 0 || image_h == 0 || tile == 0 || patch == 0 || downsample == 0 {
        return Err(Error::InvalidConfig("token budget dimensions must be positive".into()));
    }
    if tile % patch != 0 {
        return Err(Error::InvalidConfig(alloc::format!("tile {tile} is not a multiple of patch {patch}")));
    }
    let tiles = image_w.div_ceil(tile) * image_h.div_ceil(tile) + u64::from(include_global);
    let per_tile = (tile / patch).pow(2);
    let tokens_pre = tiles * per_tile;
    if tokens_pre % downsample != 0 {
        return Err(Error::InvalidConfig(alloc::format!("{tokens_pre} tokens do not divide by {downsample}")));
    }
    Ok(TokenBudget { tiles, tokens_pre, tokens_post: tokens_pre / downsample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const DT: f64 = 0.05;

    fn straight_path() -> Vec<Vec2> {
        (1..=20).map(|k| Vec2::new(k as f64, 0.0)).collect()
    }

    fn output(path: Vec<Vec2>, waypoints: Vec<Vec2>) -> DrivingOutput {
        DrivingOutput { path, waypoints, commentary: None }
    }

    #[test]
    fn cumsum_examples() {
        assert_eq!(cumsum_waypoints(&[Vec2::ZERO; 4]).unwrap(), vec![Vec2::ZERO; 4]);
        let d = [Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert_eq!(cumsum_waypoints(&d).unwrap(), vec![Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(2.0, 1.0)]);
        assert!(cumsum_waypoints(&[Vec2::new(f64::NAN, 0.0)]).is_err());
        assert!(cumsum_waypoints(&[]).is_err());
    }

    #[test]
    fn mse_examples() {
        let a = output(straight_path(), vec![Vec2::new(1.0, 1.0); 8]);
        assert_eq!(mse_loss(&a, &a).unwrap(), (0.0, 0.0));
        let shifted = output(a.path.iter().map(|p| *p + Vec2::new(1.0, -1.0)).collect(), a.waypoints.iter().map(|p| *p + Vec2::new(-1.0, 1.0)).collect());
        assert_eq!(mse_loss(&a, &shifted).unwrap(), (1.0, 1.0));
        let short = output(straight_path(), vec![Vec2::ZERO; 7]);
        assert!(mse_loss(&a, &short).is_err());
    }

    /// Flatten to coordinates and average squared differences.
    fn reference_mse(a: &[Vec2], b: &[Vec2]) -> f64 {
        let fa: Vec<f64> = a.iter().flat_map(|p| [p.x, p.y]).collect();
        let fb: Vec<f64> = b.iter().flat_map(|p| [p.x, p.y]).collect();
        fa.iter().zip(&fb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / fa.len() as f64
    }

    fn vecs(n: usize) -> impl Strategy<Value = Vec<Vec2>> {
        proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0).prop_map(|(x, y)| Vec2::new(x, y)), n)
    }

    proptest! {
        #[test]
        fn mse_matches_reference(p1 in vecs(20), w1 in vecs(8), p2 in vecs(20), w2 in vecs(8)) {
            let (lp, lw) = mse_loss(&output(p1.clone(), w1.clone()), &output(p2.clone(), w2.clone())).unwrap();
            prop_assert!((lp - reference_mse(&p1, &p2)).abs() < 1e-12 * (1.0 + lp));
            prop_assert!((lw - reference_mse(&w1, &w2)).abs() < 1e-12 * (1.0 + lw));
        }

        #[test]
        fn diff_inverts_cumsum(d in vecs(8)) {
            let back = diff_waypoints(&cumsum_waypoints(&d).unwrap());
            for (a, b) in back.iter().zip(&d) {
                prop_assert!((a.x - b.x).abs() <= 1e-12 && (a.y - b.y).abs() <= 1e-12);
            }
        }

        #[test]
        fn steering_sign_survives_scaling(curv in -0.2f64..0.2, scale in 0.2f64..5.0, speed in 0.0f64..12.0) {
            prop_assume!(curv.abs() > 1e-3);
            let path: Vec<Vec2> = (1..=20).map(|k| { let x = k as f64; Vec2::new(x, curv * x * x) }).collect();
            let scaled: Vec<Vec2> = path.iter().map(|p| *p * scale).collect();
            let cfg = ControllerConfig::default();
            let a = lateral_error(&path, speed, &cfg).unwrap();
            let b = lateral_error(&scaled, speed, &cfg).unwrap();
            prop_assert_eq!(a.signum(), b.signum());
        }

        #[test]
        fn early_stop_never_reverts(steps in proptest::collection::vec((0.0f64..50.0, -0.05f64..0.05, any::<bool>()), 1..200)) {
            let mut policy = StopPolicy::new(300.0);
            let mut travelled = 0.0;
            let mut seen_stop = false;
            for (ds, steer, inter) in steps {
                travelled += ds;
                let d = early_stop_filter(&mut policy, steer, travelled, inter);
                if seen_stop {
                    prop_assert_eq!(d, StopDecision::Stop);
                }
                seen_stop |= d == StopDecision::Stop;
            }
        }
    }

    #[test]
    fn lateral_straight_and_left() {
        let cfg = ControllerConfig::default();
        let mut pid = cfg.lateral_pid();
        let steer = lateral_pid(&output(straight_path(), vec![Vec2::ZERO; 8]), 5.0, &mut pid, &cfg, DT).unwrap();
        assert!(steer.abs() < 1e-6);
        let left: Vec<Vec2> = (1..=20).map(|k| Vec2::new(k as f64, 1.0)).collect();
        let mut pid = cfg.lateral_pid();
        assert!(lateral_pid(&output(left, vec![Vec2::ZERO; 8]), 5.0, &mut pid, &cfg, DT).unwrap() > 0.0);
    }

    #[test]
    fn lateral_at_standstill_uses_min_lookahead() {
        let cfg = ControllerConfig::default();
        let r = 8.0;
        let path: Vec<Vec2> = (1..=20).map(|k| { let th = k as f64 / r; Vec2::new(r * th.sin(), r - r * th.cos()) }).collect();
        let mut pid = cfg.lateral_pid();
        let steer = lateral_pid(&output(path.clone(), vec![Vec2::ZERO; 8]), 0.0, &mut pid, &cfg, DT).unwrap();
        let line = Polyline::new(path).unwrap();
        let s = line.project(Vec2::ZERO).s;
        let target = line.point_at(s + cfg.lookahead_min);
        assert!(steer > 0.0);
        assert!((steer - cfg.lateral.kp * target.y.atan2(target.x)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_path_rejected() {
        let cfg = ControllerConfig::default();
        let mut pid = cfg.lateral_pid();
        let err = lateral_pid(&output(vec![Vec2::new(1.0, 1.0); 20], vec![Vec2::ZERO; 8]), 1.0, &mut pid, &cfg, DT).unwrap_err();
        assert_eq!(err, Error::PathDegenerate);
    }

    fn constant_speed_wps(v: f64) -> Vec<Vec2> {
        (1..=8).map(|k| Vec2::new(v * 0.25 * k as f64, 0.0)).collect()
    }

    #[test]
    fn longitudinal_examples() {
        let cfg = ControllerConfig::default();
        let mut pid = cfg.longitudinal_pid();
        let mut a = 1.0;
        for _ in 0..100 {
            a = longitudinal_pid(&output(straight_path(), constant_speed_wps(6.0)), 6.0, &mut pid, &cfg, DT);
        }
        assert!(a.abs() < 0.05);
        let mut pid = cfg.longitudinal_pid();
        assert_eq!(longitudinal_pid(&output(straight_path(), vec![Vec2::ZERO; 8]), 5.0, &mut pid, &cfg, DT), -cfg.b_emergency);
        let mut pid = cfg.longitudinal_pid();
        assert!(longitudinal_pid(&output(straight_path(), constant_speed_wps(5.0)), 0.0, &mut pid, &cfg, DT) > 0.0);
    }

    #[test]
    fn entangled_collapses_when_stationary() {
        let cfg = ControllerConfig::default();
        let r = 8.0;
        let turn: Vec<Vec2> = (1..=20).map(|k| { let th = k as f64 / r; Vec2::new(r * th.sin(), r - r * th.cos()) }).collect();
        let (mut lat, mut lon) = (cfg.lateral_pid(), cfg.longitudinal_pid());
        let cmd = entangled_control(&[Vec2::ZERO; 8], 0.0, &mut lat, &mut lon, &cfg, DT);
        assert_eq!(cmd.steer, 0.0);
        let mut pid = cfg.lateral_pid();
        let semi = lateral_pid(&output(turn, vec![Vec2::ZERO; 8]), 0.0, &mut pid, &cfg, DT).unwrap();
        assert!(semi > 0.05);
    }

    #[test]
    fn entangled_agrees_on_straight_and_follows_wp1() {
        let cfg = ControllerConfig::default();
        let (mut lat, mut lon) = (cfg.lateral_pid(), cfg.longitudinal_pid());
        let cmd = entangled_control(&constant_speed_wps(5.0), 5.0, &mut lat, &mut lon, &cfg, DT);
        let mut pid = cfg.lateral_pid();
        let semi = lateral_pid(&output(straight_path(), constant_speed_wps(5.0)), 5.0, &mut pid, &cfg, DT).unwrap();
        assert!((cmd.steer - semi).abs() < 1e-6);

        let wps: Vec<Vec2> = (1..=8).map(|k| { let th = 0.1 * k as f64; Vec2::new(8.0 * th.sin(), 8.0 - 8.0 * th.cos()) }).collect();
        let (mut lat, mut lon) = (cfg.lateral_pid(), cfg.longitudinal_pid());
        let cmd = entangled_control(&wps, 3.0, &mut lat, &mut lon, &cfg, DT);
        let bearing = wps[1].y.atan2(wps[1].x);
        assert!(cmd.steer > 0.0);
        assert!((cmd.steer - cfg.lateral.kp * bearing).abs() < 1e-12);
    }

    #[test]
    fn early_stop_examples() {
        let mut p = StopPolicy::new(2100.0);
        assert_eq!(early_stop_filter(&mut p, 0.0, 2000.0, false), StopDecision::Continue);
        let mut p = StopPolicy::new(2100.0);
        assert_eq!(early_stop_filter(&mut p, 0.005, 2150.0, true), StopDecision::Continue);
        assert_eq!(early_stop_filter(&mut p, 0.3, 2160.0, false), StopDecision::Continue);
        assert_eq!(early_stop_filter(&mut p, 0.005, 2170.0, false), StopDecision::Stop);
        assert_eq!(early_stop_filter(&mut p, 0.5, 2180.0, true), StopDecision::Stop);
    }

    #[test]
    fn token_budget_examples() {
        let b = compute_token_budget(336, 336, 336, 14, 2, false).unwrap();
        assert_eq!(b, TokenBudget { tiles: 1, tokens_pre: 576, tokens_post: 288 });
        let b = compute_token_budget(672, 336, 336, 14, 2, false).unwrap();
        assert_eq!(b, TokenBudget { tiles: 2, tokens_pre: 1152, tokens_post: 576 });
        assert_eq!(compute_token_budget(672, 336, 336, 14, 2, true).unwrap().tiles, 3);
        assert!(matches!(compute_token_budget(336, 336, 336, 15, 2, false), Err(Error::InvalidConfig(_))));
        assert!(matches!(compute_token_budget(336, 336, 336, 14, 5, false), Err(Error::InvalidConfig(_))));
    }
}
