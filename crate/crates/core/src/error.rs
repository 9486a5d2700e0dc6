use alloc::string::String;

use crate::sim::InfractionKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A blocking obstacle needs a lateral offset beyond the drivable margin.
    #[error("unplannable detour: needs {required:.3} m lateral offset, drivable margin is {available:.3} m")]
    Unplannable { required: f64, available: f64 },
    #[error("degenerate path: all points coincide")]
    PathDegenerate,
    #[error("no samples available in any weighted bucket")]
    EmptyDataset,
    #[error("augmentation out of range: {0}")]
    InvalidAugmentation(String),
    #[error("penalty table has no coefficient for {0:?}")]
    MissingCoefficient(InfractionKind),
}
