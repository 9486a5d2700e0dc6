
#[allow(unused_imports)]
use num_traits::Float;
use super::{ExpertConfig, Hazard, HazardKind, SourceDirection};
use crate::geometry::{OrientedBox, Polyline, Vec2};
use crate::sim::{ActorKind, ActorScript, WorldState};

/// Lateral half-width of the band the ego sweeps along the plan.
pub fn corridor_half_width(world: &WorldState, cfg: &ExpertConfig) -> f64 {
    world.ego.half_extents.1 + cfg.corridor_margin
}

/// Hazard lookahead measured from the front bumper.
pub fn hazard_lookahead(speed: f64, cfg: &ExpertConfig) -> f64 {
    cfg.lookahead_min.max(speed * cfg.lookahead_time)
}

/// Arc-length and lateral extent of a box relative to `path`.
pub(crate) fn box_extent(path: &Polyline, footprint: &OrientedBox) -> (f64, f64, f64, f64) {
    let (mut s_lo, mut s_hi, mut d_lo, mut d_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for c in footprint.corners() {
        let p = path.project(c);
        s_lo = s_lo.min(p.s);
        s_hi = s_hi.max(p.s);
        d_lo = d_lo.min(p.d);
        d_hi = d_hi.max(p.d);
    }
    (s_lo, s_hi, d_lo, d_hi)
}

pub fn classify_direction(actor_yaw: f64, path_heading: f64, lateral: f64) -> SourceDirection {
    let c = (actor_yaw - path_heading).cos();
    if c < -0.3 {
        SourceDirection::Oncoming
    } else if c > 0.9 && lateral.abs() < 1.5 {
        SourceDirection::Front
    } else if lateral > 0.0 {
        SourceDirection::Left
    } else {
        SourceDirection::Right
    }
}

/// Entry arc length of segment `p0 → p1` into the band of half-width `w`
/// around `path`, restricted to `[s_from, s_to]`. Returns the smallest arc
/// length the segment reaches inside the band.
pub fn segment_band_entry(path: &Polyline, p0: Vec2, p1: Vec2, w: f64, s_from: f64, s_to: f64) -> Option<f64> {
    let pts = path.points();
    let cum = path.cumulative_arclength();
    let mut best: Option<f64> = None;
    for i in 0..pts.len() - 1 {
        let (sa, sb) = (cum[i], cum[i + 1]);
        if sb <= s_from || sa >= s_to || sb <= sa {
            continue;
        }
        let len = sb - sa;
        let t = (pts[i + 1] - pts[i]) * (1.0 / len);
        let n = t.perp();
        let u_lo = (s_from - sa).max(0.0);
        let u_hi = (s_to - sa).min(len);
        let (a, b) = (p0 - pts[i], p1 - pts[i]);
        let (u0, v0) = (a.dot(t), a.dot(n));
        let (du, dv) = (b.dot(t) - u0, b.dot(n) - v0);
        if let Some((t_in, t_out)) = liang_barsky(u0, v0, du, dv, u_lo, u_hi, -w, w) {
            let s = sa + (u0 + du * t_in).min(u0 + du * t_out);
            if best.map_or(true, |b| s < b) {
                best = Some(s);
            }
        }
    }
    best
}

/// Parametric clip of `(x0 + t·dx, y0 + t·dy)`, t ∈ [0, 1], against an
/// axis-aligned rectangle.
fn liang_barsky(x0: f64, y0: f64, dx: f64, dy: f64, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Nearest object along `path` that the ego has to respect.
///
/// `ego_s` is the rear-axle arc length on `path`.
pub fn select_leading_object(world: &WorldState, path: &Polyline, ego_s: f64, cfg: &ExpertConfig) -> Hazard {
    let v = world.ego.speed;
    let front_s = ego_s + world.config.vehicle.front_overhang();
    let horizon = hazard_lookahead(v, cfg);
    let far_s = front_s + horizon;
    let w = corridor_half_width(world, cfg);
    // Boundary contact is not an intrusion.
    let eps = 1e-6;
    let mut best = Hazard::none();
    let mut best_gap = f64::INFINITY;
    let mut offer = |h: Hazard| {
        if h.gap < best_gap {
            best_gap = h.gap;
            best = h;
        }
    };

    for actor in world.actors.iter().filter(|a| a.present) {
        match actor.kind {
            ActorKind::Vehicle | ActorKind::Static => {
                let (s_lo, s_hi, d_lo, d_hi) = box_extent(path, &actor.footprint());
                if s_hi <= front_s || s_lo >= far_s || d_lo >= w - eps || d_hi <= -w + eps {
                    continue;
                }
                let center = path.project(actor.pose.position());
                let heading = path.heading_at(center.s);
                let along = actor.velocity().dot(Vec2::from_angle(heading));
                offer(Hazard {
                    kind: HazardKind::LeadingVehicle,
                    gap: (s_lo - front_s).max(0.0),
                    closing_speed: v - along,
                    source_direction: classify_direction(actor.pose.yaw, heading, center.d),
                    actor: Some(actor.id),
                });
            }
            ActorKind::Walker => {
                let ActorScript::Walk(script) = &actor.script else { continue };
                let p0 = actor.pose.position();
                let reach = if script.started { (actor.speed * cfg.walker_horizon).min(script.remaining()) } else { 0.0 };
                let p1 = p0 + script.direction * reach;
                let band = w + actor.half_width.max(actor.half_length);
                if let Some(s) = segment_band_entry(path, p0, p1, band, front_s, far_s) {
                    let gap = (s - front_s - actor.half_length).max(0.0);
                    let along = actor.velocity().dot(Vec2::from_angle(path.heading_at(s)));
                    offer(Hazard {
                        kind: HazardKind::Walker,
                        gap,
                        closing_speed: v - along,
                        source_direction: SourceDirection::Front,
                        actor: Some(actor.id),
                    });
                }
            }
        }
    }

    let map = &world.map;
    for light in &map.traffic_lights {
        let gap = light.route_s - front_s;
        if light.is_red(world.tick) && gap > 0.0 && gap <= horizon {
            offer(Hazard { kind: HazardKind::RedLight, gap, closing_speed: v, source_direction: SourceDirection::Front, actor: None });
        }
    }
    for (sign, state) in map.stop_signs.iter().zip(&world.monitor.stop_zones) {
        let gap = sign.route_s - front_s;
        if state.stopped_for < cfg.stop_dwell && gap > 0.0 && gap <= horizon {
            offer(Hazard { kind: HazardKind::StopSign, gap, closing_speed: v, source_direction: SourceDirection::Front, actor: None });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::sim::{Actor, MapFeatures, SimConfig, VehicleState, WalkScript};
    use alloc::vec;

    fn world(speed: f64) -> WorldState {
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(200.0, 0.0)]).unwrap();
        let mut w = WorldState::new(MapFeatures::new(route, 8.3, 200.0), SimConfig::default());
        let ego = VehicleState::new(Pose2D::new(10.0, 0.0, 0.0), speed, &w.config.vehicle);
        w.set_ego(ego);
        w
    }

    fn plan(w: &WorldState) -> Polyline {
        w.map.plan_route.clone()
    }

    #[test]
    fn empty_world_is_clear() {
        let w = world(5.0);
        let h = select_leading_object(&w, &plan(&w), 10.0, &ExpertConfig::default());
        assert_eq!(h.kind, HazardKind::None);
    }

    #[test]
    fn vehicle_ahead_gap_and_closing_speed() {
        let mut w = world(5.0);
        // Ego front bumper at 13.9; rear bumper of the lead 10 m further.
        let center = 13.9 + 10.0 + 2.45;
        w.actors.push(Actor {
            id: 1,
            kind: ActorKind::Vehicle,
            pose: Pose2D::new(center, 0.0, 0.0),
            speed: 3.0,
            half_length: 2.45,
            half_width: 1.05,
            present: true,
            script: ActorScript::Fixed,
        });
        let h = select_leading_object(&w, &plan(&w), 10.0, &ExpertConfig::default());
        assert_eq!(h.kind, HazardKind::LeadingVehicle);
        assert!((h.gap - 10.0).abs() < 1e-9);
        assert!((h.closing_speed - 2.0).abs() < 1e-12);
        assert_eq!(h.source_direction, SourceDirection::Front);
    }

    #[test]
    fn direction_classes() {
        assert_eq!(classify_direction(core::f64::consts::PI, 0.0, 0.0), SourceDirection::Oncoming);
        assert_eq!(classify_direction(0.0, 0.0, 0.3), SourceDirection::Front);
        assert_eq!(classify_direction(-1.2, 0.0, 2.0), SourceDirection::Left);
        assert_eq!(classify_direction(1.2, 0.0, -2.0), SourceDirection::Right);
    }

    fn walker(at: Vec2, dir: Vec2, speed: f64) -> Actor {
        Actor {
            id: 9,
            kind: ActorKind::Walker,
            pose: Pose2D::new(at.x, at.y, dir.angle()),
            speed,
            half_length: 0.3,
            half_width: 0.3,
            present: true,
            script: ActorScript::Walk(WalkScript {
                start_at_route_s: 0.0,
                direction: dir,
                walk_speed: speed,
                walk_distance: 12.0,
                walked: 0.0,
                started: true,
            }),
        }
    }

    /// Smallest arc length of the walker's predicted positions inside the band,
    /// from dense time sampling.
    fn dense_entry(path: &Polyline, p0: Vec2, dir: Vec2, speed: f64, horizon: f64, band: f64, s_from: f64, s_to: f64) -> Option<f64> {
        let steps = 200_000;
        let mut best: Option<f64> = None;
        for k in 0..=steps {
            let t = horizon * k as f64 / steps as f64;
            let p = path.project(p0 + dir * (speed * t));
            if p.d.abs() <= band && p.s >= s_from && p.s <= s_to && best.map_or(true, |b| p.s < b) {
                best = Some(p.s);
            }
        }
        best
    }

    #[test]
    fn crossing_walker_matches_dense_oracle() {
        let cfg = ExpertConfig::default();
        let mut w = world(5.0);
        let front = 13.9;
        let cases = [
            (Vec2::new(front + 12.0, -5.0), Vec2::new(0.0, 1.0)),
            (Vec2::new(front + 12.0, 5.0), Vec2::from_angle(-2.0)),
            (Vec2::new(front + 8.0, -4.0), Vec2::from_angle(0.9)),
            (Vec2::new(front + 15.0, -6.5), Vec2::from_angle(2.3)),
        ];
        for (at, dir) in cases {
            w.actors = vec![walker(at, dir, 1.4)];
            let path = plan(&w);
            let h = select_leading_object(&w, &path, 10.0, &cfg);
            let band = 1.55 + 0.3;
            let oracle = dense_entry(&path, at, dir, 1.4, cfg.walker_horizon, band, front, front + 20.0);
            match oracle {
                Some(s) => {
                    assert_eq!(h.kind, HazardKind::Walker, "{at:?}");
                    let expected_gap = (s - front - 0.3).max(0.0);
                    assert!((h.gap - expected_gap).abs() < 1e-3, "{} vs {}", h.gap, expected_gap);
                }
                None => assert_eq!(h.kind, HazardKind::None, "{at:?}"),
            }
        }
    }

    #[test]
    fn walker_walking_away_is_ignored() {
        let mut w = world(5.0);
        w.actors = vec![walker(Vec2::new(30.0, -3.0), Vec2::new(0.0, -1.0), 1.4)];
        let h = select_leading_object(&w, &plan(&w), 10.0, &ExpertConfig::default());
        assert_eq!(h.kind, HazardKind::None);
    }

    #[test]
    fn red_light_is_virtual_leader() {
        let route = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(200.0, 0.0)]).unwrap();
        let mut map = MapFeatures::new(route, 8.3, 200.0);
        map.traffic_lights.push(crate::sim::TrafficLight { route_s: 18.0, position: Vec2::new(18.0, 0.0), red_until_tick: 100 });
        let w = WorldState::new(map, SimConfig::default());
        let h = select_leading_object(&w, &w.map.plan_route.clone(), 0.0, &ExpertConfig::default());
        assert_eq!(h.kind, HazardKind::RedLight);
        assert!((h.gap - (18.0 - 3.9)).abs() < 1e-12);
    }
}
