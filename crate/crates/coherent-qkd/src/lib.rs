//! Certified asymptotic secret-key rates for non-phase-randomized
//! coherent-state QKD.
//!
//! The library models a phase-encoding protocol in which Alice sends one of
//! six two-mode coherent states (a four-state BB84-style preset is also
//! provided), Bob interferes the reference and signal modes and watches two
//! threshold detectors, and security rests only on the pairwise overlaps of
//! the code states, the observed detection statistics, and the assumption
//! that the no-detection operator is basis independent.
//!
//! The pipeline: [`states`] builds the preparation set and its overlap
//! matrix, [`channel`] produces the expected click statistics under loss,
//! dark counts and misalignment, [`moment`] turns both into a block Gram
//! (moment) matrix with linear constraints, [`sdp`] maximizes the phase
//! error rate over that constraint set with a dense interior-point solver,
//! and [`keyrate`] assembles key rates, beam-splitting upper bounds, and
//! decoy-state baselines into loss sweeps. [`cli`] drives batch runs and
//! writes machine-readable curve data.
//!
//! [`fock`] holds independent truncated-Fock-space oracles used by the test
//! suite to validate the channel model and the moment-matrix construction
//! from first principles.

pub mod channel;
pub mod cli;
pub mod fock;
pub mod keyrate;
pub mod moment;
pub mod sdp;
pub mod states;

#[cfg(doctest)]
mod book;
