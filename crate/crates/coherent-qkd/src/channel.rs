//! Expected detection statistics under loss, dark counts, misalignment, and
//! double-click remapping, plus a seeded Monte Carlo cross-check.
//!
//! The model: amplitudes are damped by `√η` before the interferometer, each
//! threshold detector independently fails to click with probability
//! `(1−p_dc)·exp(−|β_j|²)` where `β_j` is the coherent amplitude reaching
//! detector `j`, double clicks are assigned a uniformly random bit, and a
//! misalignment flip with probability ε is applied to conclusive outcomes.
//! Detector inefficiency is folded into the total loss.

use crate::states::{CoherentAmplitude, StateSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum ChannelError {
    #[error("{name} out of range: got {value}, expected {bounds}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        bounds: &'static str,
    },
    #[error("statistics table row (z={z}, y={y}) sums to {sum}, expected 1")]
    Denormalized { z: usize, y: usize, sum: f64 },
}

/// Bob's basis choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// y = 0, extracts key bits.
    Key,
    /// y = 1, estimates Eve's information.
    Test,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Key, Basis::Test];

    pub fn index(self) -> usize {
        match self {
            Basis::Key => 0,
            Basis::Test => 1,
        }
    }
}

/// Measurement outcome of the three-outcome POVM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Bit0,
    Bit1,
    NoClick,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Bit0, Outcome::Bit1, Outcome::NoClick];

    pub fn index(self) -> usize {
        match self {
            Outcome::Bit0 => 0,
            Outcome::Bit1 => 1,
            Outcome::NoClick => 2,
        }
    }
}

/// Channel and detector parameters. `total_loss_db` combines channel loss
/// and detection efficiency; `p_dc` is the dark-count probability per
/// detector per gate; `epsilon` the misalignment flip probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub total_loss_db: f64,
    pub p_dc: f64,
    pub epsilon: f64,
}

impl ChannelParams {
    pub fn new(total_loss_db: f64, p_dc: f64, epsilon: f64) -> Result<Self, ChannelError> {
        if !total_loss_db.is_finite() || total_loss_db < 0.0 {
            return Err(ChannelError::OutOfRange {
                name: "total_loss_db",
                value: total_loss_db,
                bounds: ">= 0",
            });
        }
        if !(0.0..1.0).contains(&p_dc) {
            return Err(ChannelError::OutOfRange {
                name: "p_dc",
                value: p_dc,
                bounds: "[0, 1)",
            });
        }
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(ChannelError::OutOfRange {
                name: "epsilon",
                value: epsilon,
                bounds: "[0, 0.5]",
            });
        }
        Ok(Self {
            total_loss_db,
            p_dc,
            epsilon,
        })
    }

    /// The paper's simulation defaults: p_dc = 1e−7, ε = 2%.
    pub fn with_loss_db(total_loss_db: f64) -> Result<Self, ChannelError> {
        Self::new(total_loss_db, 1e-7, 0.02)
    }
}

/// η = 10^(−dB/10).
pub fn transmittance(params: &ChannelParams) -> f64 {
    10f64.powf(-params.total_loss_db / 10.0)
}

/// Per-detector click/no-click probabilities for one state under one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickProbs {
    pub c0: f64,
    pub c1: f64,
    pub n0: f64,
    pub n1: f64,
}

/// Click model: detector j receives the coherent amplitude
/// `β_j = (√η·r + (−1)^j e^{−iyπ/2} √η·s)/√2` and stays dark with
/// probability `N_j = (1−p_dc)·exp(−|β_j|²)`; `C_j = 1 − N_j`.
///
/// The exponential is the vacuum projection of the coherent state at the
/// port. In the key basis (y = 0) the state `|√μ⟩|√μ⟩` interferes fully
/// into detector 0; in the test basis (y = 1) the state `|√μ⟩|i√μ⟩` does.
pub fn click_probabilities(
    state: &CoherentAmplitude,
    basis: Basis,
    params: &ChannelParams,
) -> ClickProbs {
    let eta_amp = transmittance(params).sqrt();
    let r = state.reference * eta_amp;
    let s = state.signal * eta_amp;
    // e^{−iyπ/2}: 1 in the key basis, −i in the test basis.
    let rot = match basis {
        Basis::Key => num_complex::Complex64::new(1.0, 0.0),
        Basis::Test => num_complex::Complex64::new(0.0, -1.0),
    };
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let beta0 = (r + rot * s) * inv_sqrt2;
    let beta1 = (r - rot * s) * inv_sqrt2;
    let survive = 1.0 - params.p_dc;
    let n0 = survive * (-beta0.norm_sqr()).exp();
    let n1 = survive * (-beta1.norm_sqr()).exp();
    ClickProbs {
        c0: 1.0 - n0,
        c1: 1.0 - n1,
        n0,
        n1,
    }
}

/// Outcome probabilities before misalignment, with double clicks split
/// evenly: `T(0) = C₀N₁ + C₀C₁/2`, `T(1) = C₁N₀ + C₀C₁/2`, `T(∅) = N₀N₁`.
pub fn outcome_probabilities(clicks: &ClickProbs) -> (f64, f64, f64) {
    let double = clicks.c0 * clicks.c1 / 2.0;
    (
        clicks.c0 * clicks.n1 + double,
        clicks.c1 * clicks.n0 + double,
        clicks.n0 * clicks.n1,
    )
}

/// Misalignment flips conclusive outcomes:
/// `P(0) = (1−ε)T(0) + εT(1)`, `P(1) = (1−ε)T(1) + εT(0)`, `P(∅) = T(∅)`.
pub fn apply_misalignment(t0: f64, t1: f64, t_no: f64, epsilon: f64) -> (f64, f64, f64) {
    (
        (1.0 - epsilon) * t0 + epsilon * t1,
        (1.0 - epsilon) * t1 + epsilon * t0,
        t_no,
    )
}

/// The full probability table p(b|y,z) over states z, bases y, outcomes b.
#[derive(Debug, Clone)]
pub struct StatisticsTable {
    /// `p[z][y][b]` with b indexed per [`Outcome::index`].
    p: Vec<[[f64; 3]; 2]>,
}

impl StatisticsTable {
    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    pub fn prob(&self, b: Outcome, y: Basis, z: usize) -> f64 {
        self.p[z][y.index()][b.index()]
    }

    /// No-click probability for state z under basis y. The model makes this
    /// basis independent; both values are exposed so downstream code can
    /// choose which to constrain.
    pub fn no_click(&self, y: Basis, z: usize) -> f64 {
        self.prob(Outcome::NoClick, y, z)
    }

    /// Largest normalization violation max_z,y |Σ_b p(b|y,z) − 1|.
    pub fn max_normalization_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.p {
            for y in 0..2 {
                let sum: f64 = row[y].iter().sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    /// Plain-text table for debugging; column order matches the protocol
    /// table: B₀⁰, B₀¹, B_y^∅, B₁⁰, B₁¹.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("state,b00,b01,b_noclick,b10,b11\n");
        for (z, row) in self.p.iter().enumerate() {
            writeln!(
                out,
                "{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                z + 1,
                row[0][0],
                row[0][1],
                row[0][2],
                row[1][0],
                row[1][1],
            )
            .expect("write to string");
        }
        out
    }
}

/// Evaluate the table for every state under both bases.
pub fn statistics_table(set: &StateSet, params: &ChannelParams) -> StatisticsTable {
    let p = set
        .states
        .iter()
        .map(|state| {
            let mut row = [[0.0; 3]; 2];
            for basis in Basis::BOTH {
                let clicks = click_probabilities(state, basis, params);
                let (t0, t1, t_no) = outcome_probabilities(&clicks);
                let (p0, p1, p_no) = apply_misalignment(t0, t1, t_no, params.epsilon);
                row[basis.index()] = [p0, p1, p_no];
            }
            row
        })
        .collect();
    StatisticsTable { p }
}

/// Key-basis summary: detection probability and bit error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyBasisSummary {
    pub p_det: f64,
    pub e_bit: f64,
}

/// Closed-form key-basis summary for a set whose key states sit at
/// positions 1 and 2 with signal intensity μ₁:
/// `p_det = 1 − (1−p_dc)²·e^{−2ημ₁}` and
/// `e_bit·p_det = ε·T(0) + (1−ε)·T(1)` evaluated for state 1 in the key
/// basis. The grouping keeps the p_dc = 0 cancellation `e_bit = ε` exact.
///
/// A p_det of zero (all-zero parameters) is returned as-is; constraint
/// construction treats it as an error before any division happens.
pub fn key_summary(set: &StateSet, params: &ChannelParams) -> KeyBasisSummary {
    let eta = transmittance(params);
    let mu1 = set.states[0].signal.norm_sqr();
    let survive = 1.0 - params.p_dc;
    let x = (-2.0 * eta * mu1).exp();
    let p_det = 1.0 - survive * survive * x;
    let numerator = params.p_dc / 2.0 * (1.0 + survive * x)
        + params.epsilon * survive * (1.0 - x);
    let e_bit = if p_det > 0.0 { numerator / p_det } else { 0.0 };
    KeyBasisSummary { p_det, e_bit }
}

/// Empirical outcome frequencies from simulating the click model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalFrequencies {
    pub f0: f64,
    pub f1: f64,
    pub f_no_click: f64,
    pub samples: u64,
}

/// Monte Carlo cross-check of the analytic table: simulates per-detector
/// clicks as independent photon/dark-count events, applies the double-click
/// coin and the misalignment flip. Deterministic under a fixed seed.
pub fn monte_carlo_check(
    set: &StateSet,
    params: &ChannelParams,
    z: usize,
    basis: Basis,
    samples: u64,
    seed: u64,
) -> EmpiricalFrequencies {
    assert!(samples >= 1, "need at least one sample");
    let clicks = click_probabilities(&set.states[z], basis, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 3];
    for _ in 0..samples {
        let click0 = rng.random::<f64>() < clicks.c0;
        let click1 = rng.random::<f64>() < clicks.c1;
        let outcome = match (click0, click1) {
            (false, false) => Outcome::NoClick,
            (true, false) => Outcome::Bit0,
            (false, true) => Outcome::Bit1,
            (true, true) => {
                if rng.random::<f64>() < 0.5 {
                    Outcome::Bit0
                } else {
                    Outcome::Bit1
                }
            }
        };
        let outcome = match outcome {
            Outcome::NoClick => Outcome::NoClick,
            bit => {
                if rng.random::<f64>() < params.epsilon {
                    match bit {
                        Outcome::Bit0 => Outcome::Bit1,
                        _ => Outcome::Bit0,
                    }
                } else {
                    bit
                }
            }
        };
        counts[outcome.index()] += 1;
    }
    let n = samples as f64;
    EmpiricalFrequencies {
        f0: counts[0] as f64 / n,
        f1: counts[1] as f64 / n,
        f_no_click: counts[2] as f64 / n,
        samples,
    }
}
