use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{Polyline, Vec2};
use crate::sim::ScenarioSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    /// One segment per scenario.
    One,
    /// Consecutive triples; a remainder of one or two scenarios becomes
    /// single-scenario segments.
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentMargins {
    pub pre: f64,
    pub post: f64,
    pub target_spacing: f64,
}

impl Default for SegmentMargins {
    fn default() -> Self {
        Self { pre: 100.0, post: 150.0, target_spacing: 200.0 }
    }
}

/// A piece of a long route with the scenarios it contains. Scenario triggers
/// are measured from the segment start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub polyline: Polyline,
    pub scenarios: Vec<ScenarioSpec>,
    pub target_points: Vec<Vec2>,
}

pub fn segment_routes(route: &Polyline, scenarios: &[ScenarioSpec], mode: SegmentMode, margins: &SegmentMargins) -> Result<Vec<RouteSegment>> {
    if !(margins.pre >= 0.0 && margins.post >= 0.0 && margins.target_spacing > 0.0) {
        return Err(Error::InvalidConfig("segment margins must be non-negative, spacing positive".into()));
    }
    let len = route.length();
    for s in scenarios {
        if !(s.trigger_distance >= 0.0 && s.trigger_distance <= len) {
            return Err(Error::InvalidSpec(alloc::format!("trigger {} outside route of length {len}", s.trigger_distance)));
        }
    }
    if scenarios.windows(2).any(|w| w[1].trigger_distance < w[0].trigger_distance) {
        return Err(Error::InvalidInput("scenarios must be sorted by trigger distance".into()));
    }

    let groups: Vec<&[ScenarioSpec]> = match mode {
        SegmentMode::One => scenarios.chunks(1).collect(),
        SegmentMode::Three => {
            let full = scenarios.len() / 3 * 3;
            scenarios[..full].chunks(3).chain(scenarios[full..].chunks(1)).collect()
        }
    };

    groups
        .into_iter()
        .map(|g| {
            let first = g[0].trigger_distance;
            let last = g[g.len() - 1].trigger_distance;
            let start_s = (first - margins.pre).max(0.0);
            let end_s = (last + margins.post).min(len);
            let polyline = route.slice(start_s, end_s)?;
            let seg_len = polyline.length();
            let mut target_points: Vec<Vec2> = Vec::new();
            let mut s = margins.target_spacing;
            while s < seg_len {
                target_points.push(polyline.point_at(s));
                s += margins.target_spacing;
            }
            target_points.push(polyline.end());
            let scenarios = g.iter().map(|sc| ScenarioSpec { trigger_distance: sc.trigger_distance - start_s, ..*sc }).collect();
            Ok(RouteSegment { start_s, end_s, polyline, scenarios, target_points })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ScenarioKind;

    fn spec(t: f64) -> ScenarioSpec {
        ScenarioSpec { kind: ScenarioKind::LeadVehicle, trigger_distance: t, distance_param: 30.0, seed: 0 }
    }

    fn long_route() -> Polyline {
        Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(600.0, 0.0), Vec2::new(600.0, 600.0)]).unwrap()
    }

    #[test]
    fn one_per_scenario() {
        let segs = segment_routes(&long_route(), &[spec(300.0), spec(600.0), spec(900.0)], SegmentMode::One, &SegmentMargins::default()).unwrap();
        assert_eq!(segs.len(), 3);
        for (seg, t) in segs.iter().zip([300.0, 600.0, 900.0]) {
            assert_eq!(seg.start_s, t - 100.0);
            assert_eq!(seg.end_s, t + 150.0);
            assert!((seg.polyline.length() - 250.0).abs() < 1e-9);
            assert_eq!(seg.scenarios[0].trigger_distance, 100.0);
        }
    }

    #[test]
    fn triple_is_one_segment() {
        let segs = segment_routes(&long_route(), &[spec(300.0), spec(600.0), spec(900.0)], SegmentMode::Three, &SegmentMargins::default()).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start_s, segs[0].end_s), (200.0, 1050.0));
        assert_eq!(segs[0].scenarios.len(), 3);
    }

    #[test]
    fn remainder_becomes_singles() {
        let specs: Vec<_> = [100.0, 200.0, 300.0, 400.0, 500.0].into_iter().map(spec).collect();
        let segs = segment_routes(&long_route(), &specs, SegmentMode::Three, &SegmentMargins::default()).unwrap();
        assert_eq!(segs.iter().map(|s| s.scenarios.len()).collect::<Vec<_>>(), vec![3, 1, 1]);
    }

    #[test]
    fn clamps_at_route_ends() {
        let segs = segment_routes(&long_route(), &[spec(50.0), spec(1150.0)], SegmentMode::One, &SegmentMargins::default()).unwrap();
        assert_eq!(segs[0].start_s, 0.0);
        assert_eq!(segs[0].scenarios[0].trigger_distance, 50.0);
        assert_eq!(segs[1].end_s, 1200.0);
    }

    #[test]
    fn target_points_every_spacing() {
        let segs = segment_routes(&long_route(), &[spec(300.0), spec(600.0), spec(900.0)], SegmentMode::Three, &SegmentMargins::default()).unwrap();
        let seg = &segs[0];
        // 850 m: points at 200, 400, 600, 800 and the end.
        assert_eq!(seg.target_points.len(), 5);
        assert_eq!(*seg.target_points.last().unwrap(), seg.polyline.end());
        for (k, p) in seg.target_points.iter().take(4).enumerate() {
            assert!(p.distance(seg.polyline.point_at(200.0 * (k + 1) as f64)) < 1e-9);
        }
    }

    #[test]
    fn rejects_outside_and_unsorted() {
        let r = long_route();
        assert!(matches!(segment_routes(&r, &[spec(1300.0)], SegmentMode::One, &SegmentMargins::default()), Err(Error::InvalidSpec(_))));
        assert!(matches!(segment_routes(&r, &[spec(500.0), spec(100.0)], SegmentMode::One, &SegmentMargins::default()), Err(Error::InvalidInput(_))));
    }
}
