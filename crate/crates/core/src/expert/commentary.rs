use alloc::format;
use alloc::string::{String, ToString};

use super::{Hazard, HazardKind};

pub const STOP_SPEED: f64 = 0.1;
pub const ACCEL_THRESHOLD: f64 = 0.5;

/// Template commentary for the expert's current intent. The first matching
/// rule wins.
pub fn generate_commentary(hazard: &Hazard, swerving: bool, v: f64, planned_accel: f64) -> String {
    if v < STOP_SPEED && planned_accel > ACCEL_THRESHOLD {
        "starting from stop".to_string()
    } else if v < STOP_SPEED && hazard.kind != HazardKind::None {
        format!("stopping for {}", hazard.kind.describe())
    } else if swerving {
        "swerving around obstacle".to_string()
    } else if hazard.kind == HazardKind::LeadingVehicle && planned_accel.abs() <= ACCEL_THRESHOLD {
        "following the leading vehicle".to_string()
    } else {
        "keep driving at the same speed".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::SourceDirection;

    fn hazard(kind: HazardKind) -> Hazard {
        Hazard { kind, gap: 5.0, closing_speed: 0.0, source_direction: SourceDirection::Front, actor: None }
    }

    #[test]
    fn templates() {
        assert_eq!(generate_commentary(&hazard(HazardKind::RedLight), false, 0.0, 0.0), "stopping for red light");
        assert_eq!(generate_commentary(&Hazard::none(), false, 0.05, 1.2), "starting from stop");
        assert_eq!(generate_commentary(&Hazard::none(), false, 8.0, 0.0), "keep driving at the same speed");
        assert_eq!(generate_commentary(&hazard(HazardKind::Walker), false, 0.0, -3.0), "stopping for walker");
        assert_eq!(generate_commentary(&hazard(HazardKind::StopSign), false, 0.0, 0.0), "stopping for stop sign");
        assert_eq!(generate_commentary(&hazard(HazardKind::LeadingVehicle), false, 4.0, 0.2), "following the leading vehicle");
        assert_eq!(generate_commentary(&Hazard::none(), true, 4.0, 0.2), "swerving around obstacle");
    }

    #[test]
    fn every_state_maps_to_a_known_template() {
        let known = [
            "starting from stop",
            "stopping for red light",
            "stopping for stop sign",
            "stopping for walker",
            "stopping for leading vehicle",
            "swerving around obstacle",
            "following the leading vehicle",
            "keep driving at the same speed",
        ];
        let kinds = [HazardKind::None, HazardKind::LeadingVehicle, HazardKind::Walker, HazardKind::RedLight, HazardKind::StopSign];
        for kind in kinds {
            for swerving in [false, true] {
                for v in [0.0, 0.05, 0.1, 3.0, 9.0] {
                    for a in [-8.0, -0.6, -0.5, 0.0, 0.5, 0.6, 2.0] {
                        let c = generate_commentary(&hazard(kind), swerving, v, a);
                        assert!(known.contains(&c.as_str()), "{c}");
                    }
                }
            }
        }
    }
}
