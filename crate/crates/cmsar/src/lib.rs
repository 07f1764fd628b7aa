//! # cmsar
//!
//! A numerical laboratory for synthetic aperture radar imaging in the
//! common-midpoint geometry: a transmitter and receiver move apart at
//! equal speeds from a shared midpoint at height `h`, and the scene on
//! the ground below is reconstructed from the scattered returns.
//!
//! The crate provides:
//!
//! * [`geometry`] — bistatic ranges, travel-time phases, the prolate
//!   spheroidal chart adapted to the two antennas, isorange ellipses;
//! * [`scene`] — reflectivity grids, sinograms, scene specs, acquisition
//!   configuration, and bit-exact persistence;
//! * [`forward`] — the time-domain forward scattering operator with its
//!   amplitude weights, pulse model and smooth data cutoffs;
//! * [`backprojection`] — the exact discrete adjoint, the normal
//!   operator, mirror-artifact prediction and peak measurement;
//! * [`microlocal`] — the canonical relation, projection Jacobians,
//!   fold/blowdown classification on the critical set, the artifact
//!   composition solver and Lagrangian intersection analysis;
//! * [`identities`] — numerical verification of the regularity
//!   identities and the near-midpoint cutoff constant.
//!
//! Backprojecting common-midpoint data does not just reconstruct the
//! scene: every scatterer returns together with its three mirror images
//! about the flight axis, the cross-track axis, and the midpoint, all at
//! full strength. The operators here reproduce that behavior exactly and
//! the diagnostic modules verify the geometry that causes it.

pub mod backprojection;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod identities;
pub mod microlocal;
pub mod scene;

pub use error::{Error, Result};
