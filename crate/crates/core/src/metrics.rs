//! Route metrics and the early-stopping model.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Pose2D};
use crate::sim::{InfractionEvent, InfractionKind};
use crate::{Error, Result};

/// Multiplicative penalty per non-terminal infraction kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PenaltyTable {
    pub coefficients: BTreeMap<InfractionKind, f64>,
}

impl Default for PenaltyTable {
    fn default() -> Self {
        let coefficients = [
            (InfractionKind::CollisionPedestrian, 0.50),
            (InfractionKind::CollisionVehicle, 0.60),
            (InfractionKind::CollisionStatic, 0.65),
            (InfractionKind::RedLight, 0.70),
            (InfractionKind::StopSign, 0.80),
            (InfractionKind::RouteDeviation, 1.0),
            (InfractionKind::AgentBlocked, 1.0),
        ]
        .into_iter()
        .collect();
        Self { coefficients }
    }
}

impl PenaltyTable {
    pub fn validate(&self) -> Result<()> {
        for kind in InfractionKind::ALL {
            match self.coefficients.get(&kind) {
                Some(&c) if c > 0.0 && c <= 1.0 => {}
                Some(_) => return Err(Error::InvalidConfig(alloc::format!("coefficient for {} must lie in (0, 1]", kind.as_str()))),
                None if kind.is_terminal() => {}
                None => return Err(Error::MissingCoefficient(kind)),
            }
        }
        Ok(())
    }

    pub fn coefficient(&self, kind: InfractionKind) -> Result<f64> {
        self.coefficients.get(&kind).copied().ok_or(Error::MissingCoefficient(kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub route_id: String,
    pub controller: String,
    pub seed: u64,
    pub route_length: f64,
    pub rc: f64,
    pub is_score: f64,
    pub ds: f64,
    pub events: Vec<InfractionEvent>,
    pub distance_travelled: f64,
    pub stopped_early: bool,
    pub max_lateral_error: f64,
}

/// Furthest projected arc length reached before the first terminal event,
/// over the route length. `trace[i]` is the pose after tick `i`.
pub fn route_completion(route: &Polyline, trace: &[Pose2D], events: &[InfractionEvent]) -> f64 {
    let cutoff = events.iter().filter(|e| e.kind.is_terminal()).map(|e| e.tick as usize).min().unwrap_or(usize::MAX);
    let upto = trace.len().min(cutoff.saturating_add(1));
    let best = trace[..upto].iter().map(|p| route.project(p.position()).s).fold(0.0, f64::max);
    (best / route.length()).clamp(0.0, 1.0)
}

/// Product of penalty coefficients over non-terminal events.
pub fn infraction_score(events: &[InfractionEvent], table: &PenaltyTable) -> Result<f64> {
    let mut score = 1.0;
    for e in events.iter().filter(|e| !e.kind.is_terminal()) {
        score *= table.coefficient(e.kind)?;
    }
    Ok(score)
}

pub fn driving_score(rc: f64, is_score: f64) -> f64 {
    100.0 * rc * is_score
}

/// Poisson infraction model for a route of length `route_length` km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopModel {
    /// Infractions per km.
    pub lambda: f64,
    /// Penalty coefficient applied per infraction.
    pub p: f64,
    pub route_length: f64,
}

impl StopModel {
    pub fn validate(&self) -> Result<()> {
        if self.lambda >= 0.0 && self.p > 0.0 && self.p <= 1.0 && self.route_length > 0.0 && self.lambda.is_finite() && self.route_length.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig("stop model needs lambda >= 0, 0 < p <= 1, L > 0".into()))
        }
    }
}

/// E[DS] when driving `d` km: 100·(d/L)·E[p^N], N ~ Poisson(λd).
pub fn expected_ds(model: &StopModel, d: f64) -> f64 {
    100.0 * (d / model.route_length) * (-model.lambda * d * (1.0 - model.p)).exp()
}

/// Distance in km that maximises [`expected_ds`].
pub fn optimal_stop_distance(model: &StopModel) -> f64 {
    let rate = model.lambda * (1.0 - model.p);
    if rate <= 0.0 {
        return model.route_length;
    }
    (1.0 / rate).min(model.route_length)
}

/// Argmax of a unimodal function on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Aggregates over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub episodes: usize,
    pub mean_ds: f64,
    pub mean_rc: f64,
    pub mean_is: f64,
    pub distance_km: f64,
    /// Infractions per km travelled, every kind listed.
    pub per_km: BTreeMap<InfractionKind, f64>,
}

pub fn summarize(results: &[EpisodeResult]) -> Result<Summary> {
    if results.is_empty() {
        return Err(Error::InvalidInput("no episode results to summarize".into()));
    }
    let n = results.len() as f64;
    let distance_km = results.iter().map(|r| r.distance_travelled).sum::<f64>() / 1000.0;
    let mut per_km: BTreeMap<InfractionKind, f64> = InfractionKind::ALL.iter().map(|k| (*k, 0.0)).collect();
    for e in results.iter().flat_map(|r| &r.events) {
        *per_km.get_mut(&e.kind).expect("all kinds present") += 1.0;
    }
    for v in per_km.values_mut() {
        *v = if distance_km > 0.0 { *v / distance_km } else { 0.0 };
    }
    Ok(Summary {
        episodes: results.len(),
        mean_ds: results.iter().map(|r| r.ds).sum::<f64>() / n,
        mean_rc: results.iter().map(|r| r.rc).sum::<f64>() / n,
        mean_is: results.iter().map(|r| r.is_score).sum::<f64>() / n,
        distance_km,
        per_km,
    })
}
