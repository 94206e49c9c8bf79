//! Beamspace basis-expansion transmission strategy for multiuser massive MIMO.
//!
//! The library models a base station with a uniform linear array (ULA) serving
//! single-antenna users whose multipath energy arrives within a narrow angular
//! spread. Channels are nearly sparse in the DFT (beamspace) basis, so each
//! user can be described by a short window of beam coefficients — its *spatial
//! signature* — plus a sub-bin rotation shift. The crate provides:
//!
//! - one-ring channel synthesis and steering vectors ([`array`]),
//! - beamspace transforms, spatial rotation, power-concentration sets and the
//!   signature search ([`beamspace`]),
//! - grouped uplink training with pilot reuse across disjoint signatures
//!   ([`uplink`]),
//! - angle-reciprocal downlink training and user-side LS estimation
//!   ([`downlink`]),
//! - matched-filter beamforming, water-filling and greedy user scheduling
//!   ([`scheduling`]),
//! - a seeded Monte Carlo experiment harness with CSV/JSON output
//!   ([`harness`]), also exposed through the `sbem` CLI.

pub mod array;
pub mod beamspace;
pub mod downlink;
pub mod error;
pub mod fft;
pub mod harness;
pub mod rng;
pub mod scheduling;
pub mod uplink;

pub use array::{ArrayConfig, ChannelVector, LinkDirection, UserProfile};
pub use beamspace::{BeamspaceVector, ConcentrationSet, SpatialSignature};
pub use error::{Error, Result};
pub use uplink::{GroupAssignment, GroupPurpose, PilotSet};
