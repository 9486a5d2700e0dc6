use alloc::borrow::Cow;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use super::hazard::{box_extent, corridor_half_width};
use super::ExpertConfig;
use crate::geometry::{Polyline, Vec2};
use crate::sim::{ActorKind, WorldState};
use crate::{Error, Result};

/// One lateral detour, in route arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwerveRegion {
    pub ramp_in: f64,
    pub hold_start: f64,
    pub hold_end: f64,
    pub ramp_out: f64,
    /// Signed peak offset, left positive.
    pub offset: f64,
}

impl SwerveRegion {
    pub fn offset_at(&self, s: f64) -> f64 {
        let w = if s <= self.ramp_in || s >= self.ramp_out {
            0.0
        } else if s < self.hold_start {
            0.5 * (1.0 - (PI * (s - self.ramp_in) / (self.hold_start - self.ramp_in)).cos())
        } else if s <= self.hold_end {
            1.0
        } else {
            0.5 * (1.0 + (PI * (s - self.hold_end) / (self.ramp_out - self.hold_end)).cos())
        };
        self.offset * w
    }
}

/// The path the expert tracks: the route, possibly with detours.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<'a> {
    pub path: Cow<'a, Polyline>,
    pub swerves: Vec<SwerveRegion>,
}

impl Plan<'_> {
    /// Lateral offset from the route at route arc length `s`.
    pub fn offset_at(&self, s: f64) -> f64 {
        self.swerves.iter().map(|r| r.offset_at(s)).fold(0.0, |a, b| if b.abs() > a.abs() { b } else { a })
    }
}

struct Obstacle {
    s_lo: f64,
    s_hi: f64,
    d_lo: f64,
    d_hi: f64,
}

/// Route centerline, with a raised-cosine detour around every static obstacle
/// that intrudes on the ego corridor.
pub fn plan_path<'a>(route: &'a Polyline, world: &WorldState, ego_route_s: f64, cfg: &ExpertConfig) -> Result<Plan<'a>> {
    let w = corridor_half_width(world, cfg);
    let clearance = world.ego.half_extents.1 + cfg.swerve_clearance;
    let vehicle = &world.config.vehicle;
    let horizon = ego_route_s + cfg.plan_horizon + 4.0 * world.ego.speed;

    let mut statics: Vec<Obstacle> = world
        .actors
        .iter()
        .filter(|a| a.present && a.kind == ActorKind::Static)
        .filter_map(|a| {
            let (s_lo, s_hi, d_lo, d_hi) = box_extent(route, &a.footprint());
            let relevant = s_hi + vehicle.rear_overhang() + cfg.swerve_ramp > ego_route_s - vehicle.front_overhang() && s_lo < horizon;
            relevant.then_some(Obstacle { s_lo, s_hi, d_lo, d_hi })
        })
        .collect();
    statics.sort_by(|a, b| a.s_lo.total_cmp(&b.s_lo));
    let eps = 1e-6;
    let blocking: Vec<&Obstacle> = statics.iter().filter(|o| o.d_lo < w - eps && o.d_hi > -w + eps).collect();
    if blocking.is_empty() {
        return Ok(Plan { path: Cow::Borrowed(route), swerves: Vec::new() });
    }

    let margin = 2.0;
    let hold = |o: &Obstacle| (o.s_lo - vehicle.front_overhang() - margin, o.s_hi + vehicle.rear_overhang() + margin);

    // Group blocking obstacles whose detours would overlap.
    let mut groups: Vec<(f64, f64, Vec<&Obstacle>)> = Vec::new();
    for o in blocking {
        let (a, b) = hold(o);
        match groups.last_mut() {
            Some(g) if a - cfg.swerve_ramp <= g.1 + cfg.swerve_ramp => {
                g.1 = g.1.max(b);
                g.2.push(o);
            }
            _ => groups.push((a, b, alloc::vec![o])),
        }
    }

    let mut swerves = Vec::new();
    for (a, b, members) in groups {
        let neighbours: Vec<&Obstacle> = statics.iter().filter(|o| o.s_hi > a && o.s_lo < b).collect();
        let left = side_offset(&members, &neighbours, clearance, 1.0);
        let right = side_offset(&members, &neighbours, clearance, -1.0);
        let offset = match (left.abs() <= cfg.swerve_max_offset, right.abs() <= cfg.swerve_max_offset) {
            (true, true) => {
                if left.abs() <= right.abs() {
                    left
                } else {
                    right
                }
            }
            (true, false) => left,
            (false, true) => right,
            (false, false) => {
                return Err(Error::Unplannable { required: left.abs().min(right.abs()), available: cfg.swerve_max_offset });
            }
        };
        swerves.push(SwerveRegion { ramp_in: a - cfg.swerve_ramp, hold_start: a, hold_end: b, ramp_out: b + cfg.swerve_ramp, offset });
    }

    let pts = route.points();
    let cum = route.cumulative_arclength();
    let mut out: Vec<Vec2> = Vec::with_capacity(pts.len() + 128);
    let mut i = 0;
    for r in &swerves {
        while i < pts.len() && cum[i] <= r.ramp_in {
            out.push(pts[i]);
            i += 1;
        }
        let steps = ((r.ramp_out - r.ramp_in) / cfg.swerve_step).ceil() as usize;
        for k in 0..=steps {
            let s = r.ramp_in + (r.ramp_out - r.ramp_in) * k as f64 / steps as f64;
            if s > 0.0 && s < route.length() {
                out.push(route.offset_point(s, r.offset_at(s)));
            }
        }
        while i < pts.len() && cum[i] < r.ramp_out {
            i += 1;
        }
    }
    out.extend_from_slice(&pts[i..]);
    out.dedup_by(|a, b| a.distance(*b) < 1e-9);
    Ok(Plan { path: Cow::Owned(Polyline::new(out)?), swerves })
}

/// Smallest offset on one side that clears every member, then pushed out
/// until no neighbouring obstacle intrudes either.
fn side_offset(members: &[&Obstacle], neighbours: &[&Obstacle], clearance: f64, side: f64) -> f64 {
    let need = |o: &Obstacle| if side > 0.0 { o.d_hi + clearance } else { o.d_lo - clearance };
    let mut off = members.iter().map(|o| need(o)).fold(0.0, |acc: f64, v| if side > 0.0 { acc.max(v) } else { acc.min(v) });
    loop {
        let hit = neighbours.iter().find(|o| o.d_lo < off + clearance - 1e-9 && o.d_hi > off - clearance + 1e-9);
        match hit {
            Some(o) => off = need(o),
            None => return off,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::sim::{Actor, ActorScript, MapFeatures, SimConfig};
    use alloc::vec;

    fn world_with(obstacles: &[(f64, f64, f64, f64)]) -> WorldState {
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(200.0, 0.0)]).unwrap();
        let mut w = WorldState::new(MapFeatures::new(route, 8.3, 200.0), SimConfig::default());
        for (i, &(s, d, hl, hw)) in obstacles.iter().enumerate() {
            w.actors.push(Actor {
                id: i as u32 + 1,
                kind: ActorKind::Static,
                pose: Pose2D::new(s, d, 0.0),
                speed: 0.0,
                half_length: hl,
                half_width: hw,
                present: true,
                script: ActorScript::Fixed,
            });
        }
        w
    }

    #[test]
    fn unobstructed_plan_is_route() {
        let w = world_with(&[]);
        let plan = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap();
        assert_eq!(*plan.path, w.map.plan_route);
        assert!(plan.swerves.is_empty());
    }

    #[test]
    fn obstacle_off_corridor_is_ignored() {
        let w = world_with(&[(60.0, -4.0, 2.0, 1.0)]);
        let plan = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap();
        assert!(plan.swerves.is_empty());
    }

    #[test]
    fn centered_obstacle_peak_offset() {
        let w = world_with(&[(60.0, 0.0, 2.0, 1.0)]);
        let plan = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap();
        assert_eq!(plan.swerves.len(), 1);
        let peak = plan.path.points().iter().map(|p| p.y.abs()).fold(0.0, f64::max);
        assert!(peak >= 1.0 + 1.05 + 0.5 - 1e-9, "peak {peak}");
        // Returns to the centerline afterwards.
        let end = plan.path.project(Vec2::new(120.0, 0.0));
        assert!(end.d.abs() < 1e-9);
        // Offset held along the whole obstacle.
        for x in [58.0, 60.0, 62.0] {
            assert!((plan.offset_at(x) - 2.55).abs() < 1e-9);
        }
    }

    #[test]
    fn detour_curvature_is_drivable() {
        let cfg = ExpertConfig::default();
        let vp = crate::sim::VehicleParams::default();
        let limit = vp.max_steer.tan() / vp.wheelbase;
        for &(d, hw) in &[(0.0, 1.0), (0.8, 0.9), (-1.0, 1.2)] {
            let w = world_with(&[(60.0, d, 2.0, hw)]);
            let plan = plan_path(&w.map.plan_route, &w, 0.0, &cfg).unwrap();
            let kappa = plan.path.vertex_curvature();
            let max = kappa.iter().cloned().fold(0.0, f64::max);
            assert!(max <= limit, "curvature {max} > {limit}");
            // Raised-cosine bound: peak·π²/(2·ramp²).
            let analytic = plan.swerves[0].offset.abs() * PI * PI / (2.0 * cfg.swerve_ramp * cfg.swerve_ramp);
            assert!(max <= analytic * 1.05 + 1e-6, "{max} vs {analytic}");
        }
    }

    #[test]
    fn picks_smaller_side() {
        let w = world_with(&[(60.0, -0.8, 2.0, 0.5)]);
        let plan = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap();
        assert!(plan.swerves[0].offset > 0.0);
        assert!((plan.swerves[0].offset - (-0.3 + 1.55)).abs() < 1e-9);
    }

    #[test]
    fn neighbour_pushes_side_choice() {
        // A door-like box right of center plus a parked car beyond it.
        let w = world_with(&[(60.0, -1.3, 0.5, 0.45), (60.0, -2.8, 2.45, 1.05)]);
        let plan = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap();
        assert!((plan.swerves[0].offset - (-0.85 + 1.55)).abs() < 1e-9);
    }

    #[test]
    fn too_wide_is_unplannable() {
        let w = world_with(&[(60.0, 0.0, 2.0, 4.0)]);
        let err = plan_path(&w.map.plan_route, &w, 0.0, &ExpertConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Unplannable { .. }));
    }
}
