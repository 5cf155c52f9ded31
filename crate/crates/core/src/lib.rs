//! Morphometric analysis of rasterised glyphs.
//!
//! The measurement pipeline upscales a grayscale glyph, binarises it at half
//! its intensity range, computes the exact Euclidean distance transform and a
//! topology-preserving skeleton, and derives stroke length, stroke thickness,
//! slant, width and height from those products ([`morphometry`]). The same
//! high-resolution products drive the perturbations in [`perturb`], and
//! [`stats`] holds the tests and scores used to compare attribute
//! distributions and to evaluate latent codes.

pub mod cli;
pub mod idx;
pub mod morphometry;
pub mod perturb;
pub mod raster;
pub mod stats;
pub mod synth;
