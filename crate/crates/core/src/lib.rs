//! Geometry codec and evaluation toolkit for shape-regression text detection.

pub mod data_io;
pub mod decode;
pub mod encode;
pub mod evalkit;
pub mod geom;
pub mod losses;
pub mod netplan;
pub mod roundtrip;
pub mod synth;

/// Default alpha radius in normalized units.
pub const DEFAULT_ALPHA: f64 = 0.06;
/// Default minimum share of boundary points an alpha-shape must touch.
pub const DEFAULT_MIN_COVERAGE: f64 = 0.9;
