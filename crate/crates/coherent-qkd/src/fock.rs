//! Truncated Fock-space validation oracles.
//!
//! Everything here reconstructs the protocol from first principles in a
//! two-mode photon-number basis (truncated at a total photon number), with
//! a coin qubit dilating the random double-click assignment into genuine
//! projectors. The resulting explicit states and measurement operators
//! satisfy the projector algebra exactly, reproduce the click statistics of
//! the analytic channel model, and yield an explicit feasible Gram matrix
//! for the moment-matrix constraint systems. None of it shares code with
//! the closed-form paths it validates.

use crate::channel::Basis;
use crate::moment::{MomentLayout, OperatorSymbol, Word};
use crate::states::{CoherentAmplitude, StateSet};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Two-mode photon-number basis `{|n, m⟩ : n + m ≤ cutoff}` ordered by
/// total photon number, then by the first mode's count.
#[derive(Debug, Clone)]
pub struct TwoModeFock {
    cutoff: usize,
    dim: usize,
}

impl TwoModeFock {
    pub fn new(cutoff: usize) -> Self {
        let dim = (cutoff + 1) * (cutoff + 2) / 2;
        Self { cutoff, dim }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Basis index of `|n, m⟩`.
    pub fn index(&self, n: usize, m: usize) -> usize {
        let total = n + m;
        debug_assert!(total <= self.cutoff);
        total * (total + 1) / 2 + n
    }

    /// Truncated two-mode coherent state `|r⟩|s⟩` (unnormalized only by the
    /// discarded tail beyond the cutoff).
    pub fn coherent(&self, r: Complex64, s: Complex64) -> Vec<Complex64> {
        let weight = |alpha: Complex64| {
            let mut c = vec![Complex64::ZERO; self.cutoff + 1];
            c[0] = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
            for n in 0..self.cutoff {
                c[n + 1] = c[n] * alpha / ((n + 1) as f64).sqrt();
            }
            c
        };
        let cr = weight(r);
        let cs = weight(s);
        let mut v = vec![Complex64::ZERO; self.dim];
        for n in 0..=self.cutoff {
            for m in 0..=(self.cutoff - n) {
                v[self.index(n, m)] = cr[n] * cs[m];
            }
        }
        v
    }
}

/// Orthonormal bases of the "detector j sees vacuum" subspaces for one
/// interferometer setting. Detector modes are
/// `d₀ = (a_R + e^{−iyπ/2} a_S)/√2` and `d₁ = (a_R − e^{−iyπ/2} a_S)/√2`,
/// matching the click model of [`crate::channel`].
#[derive(Debug, Clone)]
struct PortVacuum {
    /// `|0, m⟩_d` expanded in the number basis, m = 0..=cutoff.
    d0_vacuum: Vec<Vec<Complex64>>,
    /// `|m, 0⟩_d` expanded in the number basis.
    d1_vacuum: Vec<Vec<Complex64>>,
}

impl PortVacuum {
    fn build(fock: &TwoModeFock, basis: Basis) -> Self {
        let kappa = match basis {
            Basis::Key => Complex64::new(1.0, 0.0),
            Basis::Test => Complex64::new(0.0, -1.0),
        };
        // (d₁†)^m |vac⟩ spans the d₀-vacuum sector and vice versa:
        // |0,m⟩_d = 2^{−m/2} Σ_j √C(m,j) (∓κ̄)^{m−j} |j, m−j⟩.
        let expand = |sign: f64, m: usize| {
            let mut v = vec![Complex64::ZERO; fock.dim()];
            let mut binom_sqrt = 1.0f64; // √C(m, j) built up iteratively
            let factor = Complex64::new(sign, 0.0) * kappa.conj();
            let scale = 0.5f64.powi((m / 2) as i32) * if m % 2 == 1 { 0.5f64.sqrt() } else { 1.0 };
            for j in 0..=m {
                if j > 0 {
                    binom_sqrt *= (((m - j + 1) as f64) / (j as f64)).sqrt();
                }
                let phase = factor.powu((m - j) as u32);
                v[fock.index(j, m - j)] = phase * binom_sqrt * scale;
            }
            v
        };
        PortVacuum {
            d0_vacuum: (0..=fock.cutoff()).map(|m| expand(-1.0, m)).collect(),
            d1_vacuum: (0..=fock.cutoff()).map(|m| expand(1.0, m)).collect(),
        }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn project_span(span: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; v.len()];
    for u in span {
        let c = inner(u, v);
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for (o, ui) in out.iter_mut().zip(u.iter()) {
            *o += c * ui;
        }
    }
    out
}

/// State on field ⊗ coin; the coin qubit realizes the fair double-click
/// assignment as a projective measurement.
#[derive(Debug, Clone)]
pub struct DilatedVec {
    coin0: Vec<Complex64>,
    coin1: Vec<Complex64>,
}

impl DilatedVec {
    pub fn inner(&self, other: &DilatedVec) -> Complex64 {
        inner(&self.coin0, &other.coin0) + inner(&self.coin1, &other.coin1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re
    }
}

/// First-principles model of the six-state measurement on a truncated
/// Fock space: explicit projectors `B_y^b`, `B^∅` and code states.
#[derive(Debug, Clone)]
pub struct FockOracle {
    fock: TwoModeFock,
    ports: [PortVacuum; 2],
}

impl FockOracle {
    pub fn new(cutoff: usize) -> Self {
        let fock = TwoModeFock::new(cutoff);
        let ports = [
            PortVacuum::build(&fock, Basis::Key),
            PortVacuum::build(&fock, Basis::Test),
        ];
        Self { fock, ports }
    }

    pub fn fock(&self) -> &TwoModeFock {
        &self.fock
    }

    /// Code state with the coin prepared in `(|0⟩+|1⟩)/√2`.
    pub fn code_state(&self, amp: &CoherentAmplitude) -> DilatedVec {
        let field = self.fock.coherent(amp.reference, amp.signal);
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        DilatedVec {
            coin0: field.iter().map(|c| c * half).collect(),
            coin1: field.iter().map(|c| c * half).collect(),
        }
    }

    fn vacuum_component(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; v.len()];
        let idx = self.fock.index(0, 0);
        out[idx] = v[idx];
        out
    }

    /// Click-event field projections for one basis applied to `v`:
    /// (no-click-0 & click-1, click-0 & no-click-1, click-0 & click-1).
    fn event_projections(
        &self,
        basis: Basis,
        v: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let port = &self.ports[basis.index()];
        let p0 = project_span(&port.d0_vacuum, v);
        let p1 = project_span(&port.d1_vacuum, v);
        let nn = self.vacuum_component(v);
        let n = v.len();
        let mut nc = vec![Complex64::ZERO; n];
        let mut cn = vec![Complex64::ZERO; n];
        let mut cc = vec![Complex64::ZERO; n];
        for i in 0..n {
            nc[i] = p0[i] - nn[i];
            cn[i] = p1[i] - nn[i];
            cc[i] = v[i] - p0[i] - p1[i] + nn[i];
        }
        (nc, cn, cc)
    }

    /// Apply one measurement projector to a dilated state.
    pub fn apply_symbol(&self, sym: OperatorSymbol, v: &DilatedVec) -> DilatedVec {
        match sym {
            OperatorSymbol::NoClick => DilatedVec {
                coin0: self.vacuum_component(&v.coin0),
                coin1: self.vacuum_component(&v.coin1),
            },
            OperatorSymbol::Click { y, b } => {
                let basis = if y == 0 { Basis::Key } else { Basis::Test };
                let (nc0, cn0, cc0) = self.event_projections(basis, &v.coin0);
                let (nc1, cn1, cc1) = self.event_projections(basis, &v.coin1);
                if b == 0 {
                    // B_y^0 = Π_cn ⊗ 𝕀 + Π_cc ⊗ |0⟩⟨0|
                    DilatedVec {
                        coin0: cn0.iter().zip(cc0.iter()).map(|(a, b)| a + b).collect(),
                        coin1: cn1,
                    }
                } else {
                    // B_y^1 = Π_nc ⊗ 𝕀 + Π_cc ⊗ |1⟩⟨1|
                    DilatedVec {
                        coin0: nc0,
                        coin1: nc1.iter().zip(cc1.iter()).map(|(a, b)| a + b).collect(),
                    }
                }
            }
        }
    }

    /// Apply a word (rightmost projector acts first).
    pub fn apply_word(&self, word: &Word, v: &DilatedVec) -> DilatedVec {
        if word.is_zero() {
            return DilatedVec {
                coin0: vec![Complex64::ZERO; v.coin0.len()],
                coin1: vec![Complex64::ZERO; v.coin1.len()],
            };
        }
        let mut out = v.clone();
        for &sym in word.symbols().iter().rev() {
            out = self.apply_symbol(sym, &out);
        }
        out
    }

    /// `⟨φ|B_y^b|φ⟩` for a code state: the honest outcome probability.
    pub fn outcome_probability(&self, amp: &CoherentAmplitude, sym: OperatorSymbol) -> f64 {
        let v = self.code_state(amp);
        let bv = self.apply_symbol(sym, &v);
        v.inner(&bv).re
    }

    /// The explicit feasible Gram matrix
    /// `G[(z,i),(z',j)] = ⟨w_i φ_z | w_j φ_z'⟩` for a whole layout.
    pub fn honest_gram(&self, layout: &MomentLayout, set: &StateSet) -> DMatrix<Complex64> {
        assert_eq!(layout.n_states(), set.len());
        let mut vectors = Vec::with_capacity(layout.dim());
        for amp in &set.states {
            let base = self.code_state(amp);
            for word in layout.ops() {
                vectors.push(self.apply_word(word, &base));
            }
        }
        let dim = layout.dim();
        let mut g = DMatrix::zeros(dim, dim);
        for p in 0..dim {
            for q in p..dim {
                let v = vectors[p].inner(&vectors[q]);
                g[(p, q)] = v;
                g[(q, p)] = v.conj();
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        apply_misalignment, click_probabilities, outcome_probabilities, statistics_table,
        ChannelParams, Outcome, StatisticsTable,
    };
    use crate::states::{build_state_set, overlap, ProtocolParams};
    use std::f64::consts::FRAC_PI_2;

    fn paper_set() -> StateSet {
        let p = ProtocolParams::six_state(0.2, 0.2, 0.2, 0.1, FRAC_PI_2, FRAC_PI_2).unwrap();
        build_state_set(&p).unwrap()
    }

    #[test]
    fn coherent_vectors_reproduce_overlaps() {
        let fock = TwoModeFock::new(30);
        let set = paper_set();
        for z in 0..6 {
            for zp in 0..6 {
                let a = fock.coherent(set.states[z].reference, set.states[z].signal);
                let b = fock.coherent(set.states[zp].reference, set.states[zp].signal);
                let got = inner(&a, &b);
                let want = overlap(&set.states[z], &set.states[zp]);
                assert!((got - want).norm() < 1e-12, "({z},{zp})");
            }
        }
    }

    #[test]
    fn port_vacuum_bases_are_orthonormal() {
        let fock = TwoModeFock::new(12);
        for basis in Basis::BOTH {
            let port = PortVacuum::build(&fock, basis);
            for set in [&port.d0_vacuum, &port.d1_vacuum] {
                for (i, u) in set.iter().enumerate() {
                    for (j, w) in set.iter().enumerate() {
                        let ip = inner(u, w);
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn coherent_state_factorizes_over_detector_ports() {
        // ⟨0_{d0}|β₀,β₁⟩_d weight: projecting onto the d0-vacuum span must
        // shrink the norm² by exactly exp(−|β₀|²).
        let fock = TwoModeFock::new(40);
        let set = paper_set();
        let params = ChannelParams::new(0.0, 0.0, 0.0).unwrap();
        for z in 0..6 {
            for basis in Basis::BOTH {
                let port = PortVacuum::build(&fock, basis);
                let v = fock.coherent(set.states[z].reference, set.states[z].signal);
                let proj = project_span(&port.d0_vacuum, &v);
                let clicks = click_probabilities(&set.states[z], basis, &params);
                let expected = clicks.n0; // (1−p_dc)·e^{−|β₀|²} with p_dc = 0
                assert!(
                    (inner(&proj, &proj).re - expected).abs() < 1e-12,
                    "z={z} {basis:?}"
                );
            }
        }
    }

    #[test]
    fn projectors_satisfy_the_algebra() {
        let oracle = FockOracle::new(14);
        let set = paper_set();
        let v = oracle.code_state(&set.states[4]);
        use OperatorSymbol::*;
        // idempotence
        for sym in [Click { y: 0, b: 0 }, Click { y: 1, b: 1 }, NoClick] {
            let once = oracle.apply_symbol(sym, &v);
            let twice = oracle.apply_symbol(sym, &once);
            let diff: f64 = once
                .coin0
                .iter()
                .zip(twice.coin0.iter())
                .chain(once.coin1.iter().zip(twice.coin1.iter()))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            assert!(diff < 1e-20, "{sym:?} not idempotent: {diff}");
        }
        // orthogonality within a basis, including against the no-click
        for y in 0..2 {
            let b0 = oracle.apply_symbol(Click { y, b: 0 }, &v);
            let z = oracle.apply_symbol(Click { y, b: 1 }, &b0);
            assert!(z.norm_sqr() < 1e-20);
            let z2 = oracle.apply_symbol(NoClick, &b0);
            assert!(z2.norm_sqr() < 1e-20);
        }
        // completeness: B_y^0 + B_y^1 + B^∅ = 𝕀
        for y in 0..2 {
            let parts = [
                oracle.apply_symbol(Click { y, b: 0 }, &v),
                oracle.apply_symbol(Click { y, b: 1 }, &v),
                oracle.apply_symbol(NoClick, &v),
            ];
            let mut sum = parts[0].clone();
            for p in &parts[1..] {
                for i in 0..sum.coin0.len() {
                    sum.coin0[i] += p.coin0[i];
                    sum.coin1[i] += p.coin1[i];
                }
            }
            let diff: f64 = sum
                .coin0
                .iter()
                .zip(v.coin0.iter())
                .chain(sum.coin1.iter().zip(v.coin1.iter()))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            assert!(diff < 1e-20, "completeness violated for y={y}: {diff}");
        }
    }

    #[test]
    fn honest_probabilities_match_channel_model() {
        // At 0 dB, no dark counts, no misalignment the analytic table and
        // the first-principles Fock computation must agree.
        let oracle = FockOracle::new(30);
        let set = paper_set();
        let params = ChannelParams::new(0.0, 0.0, 0.0).unwrap();
        let table: StatisticsTable = statistics_table(&set, &params);
        for z in 0..6 {
            for (y, basis) in [(0u8, Basis::Key), (1u8, Basis::Test)] {
                for (b, outcome) in [(0u8, Outcome::Bit0), (1u8, Outcome::Bit1)] {
                    let honest =
                        oracle.outcome_probability(&set.states[z], OperatorSymbol::Click { y, b });
                    let analytic = table.prob(outcome, basis, z);
                    assert!(
                        (honest - analytic).abs() < 1e-12,
                        "z={z} y={y} b={b}: {honest} vs {analytic}"
                    );
                }
                let honest_no = oracle.outcome_probability(&set.states[z], OperatorSymbol::NoClick);
                assert!((honest_no - table.no_click(basis, z)).abs() < 1e-12);
            }
        }
        // spot-check against the raw event formulas too
        let clicks = click_probabilities(&set.states[2], Basis::Test, &params);
        let (t0, _, _) = outcome_probabilities(&clicks);
        let (p0, _, _) = apply_misalignment(t0, 0.0, 0.0, 0.0);
        let honest =
            oracle.outcome_probability(&set.states[2], OperatorSymbol::Click { y: 1, b: 0 });
        assert!((honest - p0).abs() < 1e-12);
    }
}
