//! Feature-based image mosaicking for nadir-looking camera streams.
//!
//! The pipeline turns an ordered set of overlapping frames into one
//! seamless mosaic: fast-Hessian interest points over integral images,
//! upright 64-dimensional descriptors, ratio-tested nearest-neighbor
//! matching, consensus translation estimation, and crop-and-join
//! composition along the flight path. A synthetic flight harness
//! generates ground-truthed frame sets for end-to-end evaluation.

pub mod features;
pub mod flightsim;
pub mod integral;
pub mod io;
pub mod matching;
pub mod raster;
pub mod rng;
pub mod stitcher;
pub mod transform;
