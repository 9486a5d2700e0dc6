//! Closed-loop driving harness core.
//!
//! Everything in this crate is pure computation over owned values: planar
//! geometry, a fixed-tick kinematic world, a privileged rule-based expert that
//! emits path / waypoint / commentary labels, the semi-disentangled and
//! entangled controllers, dataset curation (buckets, sampling, segmentation,
//! augmentation) and route metrics. File formats, configuration files and the
//! command-line tool live in the `drivebench` crate.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![cfg_attr(test, allow(unused_imports))]

#[cfg(test)]
#[macro_use]
extern crate std;

extern crate alloc;

pub mod catalog;
pub mod control;
pub mod data;
pub mod episode;
pub mod error;
pub mod expert;
pub mod geometry;
pub mod metrics;
pub mod sim;

pub use error::{Error, Result};
