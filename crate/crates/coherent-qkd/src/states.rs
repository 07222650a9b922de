//! Protocol preparation sets of two-mode coherent states and their exact
//! pairwise overlaps.
//!
//! Each code state is a product `|r⟩_R ⊗ |s⟩_S` of a reference-mode and a
//! signal-mode coherent state. The only state information the security
//! analysis consumes is the Hermitian overlap matrix
//! `λ_zz' = ⟨ψ_z|ψ_z'⟩`, which for coherent states has the closed form
//! `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + conj(α)·β)` per mode.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Errors from state-set construction and the Fock oracle.
#[derive(Debug, thiserror::Error)]
pub enum StatesError {
    /// A mean photon number was negative (or not finite).
    #[error("intensity {name} must be a finite number >= 0, got {value}")]
    InvalidIntensity { name: &'static str, value: f64 },
    /// A phase was not finite.
    #[error("phase {name} must be finite, got {value}")]
    InvalidPhase { name: &'static str, value: f64 },
    /// Fock truncation must keep at least the one-photon term.
    #[error("fock cutoff must be >= 1, got {0}")]
    InvalidCutoff(usize),
}

/// Which preparation set to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// The six-state protocol: two key states at intensity μ₁, two test
    /// states at μ₂, and two test states pairing reference intensity μ₃
    /// with signal intensity μ₄ at phases ±θ.
    SixState,
    /// The four-state phase-encoding BB84 protocol with a single intensity.
    Bb84Phase,
}

/// Free protocol parameters: intensities are mean photon numbers, phases in
/// radians. Phases are reduced to `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub preset: Preset,
}

impl ProtocolParams {
    /// Six-state parameters with phases reduced to `[0, 2π)`.
    pub fn six_state(
        mu1: f64,
        mu2: f64,
        mu3: f64,
        mu4: f64,
        theta1: f64,
        theta2: f64,
    ) -> Result<Self, StatesError> {
        let p = Self {
            mu1,
            mu2,
            mu3,
            mu4,
            theta1: reduce_phase(theta1)?,
            theta2: reduce_phase(theta2)?,
            preset: Preset::SixState,
        };
        p.validate()?;
        Ok(p)
    }

    /// BB84 preset: one intensity for all four states.
    pub fn bb84_phase(mu: f64) -> Result<Self, StatesError> {
        let p = Self {
            mu1: mu,
            mu2: mu,
            mu3: mu,
            mu4: mu,
            theta1: 0.0,
            theta2: 0.0,
            preset: Preset::Bb84Phase,
        };
        p.validate()?;
        Ok(p)
    }

    /// The paper's optimal tying: μ₁ = μ₂ = μ₃, θ₁ = θ₂ = π/2.
    pub fn tied(mu_key: f64, mu4: f64) -> Result<Self, StatesError> {
        Self::six_state(
            mu_key,
            mu_key,
            mu_key,
            mu4,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_2,
        )
    }

    fn validate(&self) -> Result<(), StatesError> {
        for (name, value) in [
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("mu3", self.mu3),
            ("mu4", self.mu4),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(StatesError::InvalidIntensity { name, value });
            }
        }
        Ok(())
    }

    /// Number of code states for the preset.
    pub fn n_states(&self) -> usize {
        match self.preset {
            Preset::SixState => 6,
            Preset::Bb84Phase => 4,
        }
    }
}

fn reduce_phase(theta: f64) -> Result<f64, StatesError> {
    if !theta.is_finite() {
        return Err(StatesError::InvalidPhase {
            name: "theta",
            value: theta,
        });
    }
    let mut t = theta % TAU;
    if t < 0.0 {
        t += TAU;
    }
    Ok(t)
}

/// One code state: complex amplitudes of the reference mode R and the
/// signal mode S. `|amplitude|²` is the mean photon number of the mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitude {
    pub reference: Complex64,
    pub signal: Complex64,
}

impl CoherentAmplitude {
    pub fn new(reference: Complex64, signal: Complex64) -> Self {
        Self { reference, signal }
    }

    /// Total mean photon number of the two-mode state.
    pub fn total_intensity(&self) -> f64 {
        self.reference.norm_sqr() + self.signal.norm_sqr()
    }
}

/// An ordered preparation set together with its overlap matrix λ.
///
/// λ is Hermitian with unit diagonal and positive semidefinite; these are
/// structural facts of Gram matrices, checked in the test suite rather than
/// re-verified on every construction.
#[derive(Debug, Clone)]
pub struct StateSet {
    pub states: Vec<CoherentAmplitude>,
    pub overlaps: DMatrix<Complex64>,
}

impl StateSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// λ_zz' with 0-based indices.
    pub fn overlap(&self, z: usize, zp: usize) -> Complex64 {
        self.overlaps[(z, zp)]
    }
}

/// Build the preparation set for the given parameters.
///
/// Six-state ordering is fixed: `|ψ₁⟩=|√μ₁⟩|√μ₁⟩`, `|ψ₂⟩=|√μ₁⟩|−√μ₁⟩`,
/// `|ψ₃⟩=|√μ₂⟩|i√μ₂⟩`, `|ψ₄⟩=|√μ₂⟩|−i√μ₂⟩`, `|ψ₅⟩=|√μ₃⟩|e^{iθ₁}√μ₄⟩`,
/// `|ψ₆⟩=|√μ₃⟩|e^{−iθ₂}√μ₄⟩`. All downstream block indices depend on this
/// order; the key states sit at positions 1 and 2.
pub fn build_state_set(params: &ProtocolParams) -> Result<StateSet, StatesError> {
    params.validate()?;
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let states = match params.preset {
        Preset::SixState => {
            let a1 = params.mu1.sqrt();
            let a2 = params.mu2.sqrt();
            let a3 = params.mu3.sqrt();
            let a4 = params.mu4.sqrt();
            let ph1 = Complex64::from_polar(a4, params.theta1);
            let ph2 = Complex64::from_polar(a4, -params.theta2);
            vec![
                CoherentAmplitude::new(re(a1), re(a1)),
                CoherentAmplitude::new(re(a1), re(-a1)),
                CoherentAmplitude::new(re(a2), im(a2)),
                CoherentAmplitude::new(re(a2), im(-a2)),
                CoherentAmplitude::new(re(a3), ph1),
                CoherentAmplitude::new(re(a3), ph2),
            ]
        }
        Preset::Bb84Phase => {
            let a = params.mu1.sqrt();
            vec![
                CoherentAmplitude::new(re(a), re(a)),
                CoherentAmplitude::new(re(a), re(-a)),
                CoherentAmplitude::new(re(a), im(a)),
                CoherentAmplitude::new(re(a), im(-a)),
            ]
        }
    };
    let n = states.len();
    let overlaps = DMatrix::from_fn(n, n, |z, zp| overlap(&states[z], &states[zp]));
    Ok(StateSet { states, overlaps })
}

/// Exact overlap `⟨a|b⟩` of two two-mode coherent states.
///
/// Product over modes of `exp(−|α|²/2 − |β|²/2 + conj(α)·β)`; the result
/// always has modulus ≤ 1 and `overlap(a, a) = 1`.
pub fn overlap(a: &CoherentAmplitude, b: &CoherentAmplitude) -> Complex64 {
    mode_overlap(a.reference, b.reference) * mode_overlap(a.signal, b.signal)
}

fn mode_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (alpha.conj() * beta - Complex64::new((alpha.norm_sqr() + beta.norm_sqr()) / 2.0, 0.0)).exp()
}

/// Overlap by truncated number-state expansion, `Σ_{n≤cutoff} conj(c_n(α))·c_n(β)`
/// per mode with `c_n(α) = e^{−|α|²/2} αⁿ/√(n!)`.
///
/// Converges to [`overlap`] as the cutoff grows; kept deliberately
/// independent of the closed form so it can serve as a validation oracle.
pub fn fock_overlap_oracle(
    a: &CoherentAmplitude,
    b: &CoherentAmplitude,
    cutoff: usize,
) -> Result<Complex64, StatesError> {
    if cutoff < 1 {
        return Err(StatesError::InvalidCutoff(cutoff));
    }
    Ok(mode_fock_overlap(a.reference, b.reference, cutoff)
        * mode_fock_overlap(a.signal, b.signal, cutoff))
}

fn mode_fock_overlap(alpha: Complex64, beta: Complex64, cutoff: usize) -> Complex64 {
    // c_{n+1} = c_n · α / √(n+1) keeps the expansion stable for |α|² ≤ cutoff.
    let mut ca = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut cb = Complex64::new((-beta.norm_sqr() / 2.0).exp(), 0.0);
    let mut sum = ca.conj() * cb;
    for n in 0..cutoff {
        let root = ((n + 1) as f64).sqrt();
        ca = ca * alpha / root;
        cb = cb * beta / root;
        sum += ca.conj() * cb;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn six_state_amplitudes_at_paper_optimum() {
        let p = ProtocolParams::six_state(0.2, 0.2, 0.2, 0.1, FRAC_PI_2, FRAC_PI_2).unwrap();
        let set = build_state_set(&p).unwrap();
        assert_eq!(set.len(), 6);
        let s2 = 0.2f64.sqrt();
        let s1 = 0.1f64.sqrt();
        let expected_signal = [
            c(s2, 0.0),
            c(-s2, 0.0),
            c(0.0, s2),
            c(0.0, -s2),
            c(0.0, s1),
            c(0.0, -s1),
        ];
        for (z, exp) in expected_signal.iter().enumerate() {
            assert!(
                (set.states[z].signal - exp).norm() < 1e-14,
                "state {z}: {:?} vs {:?}",
                set.states[z].signal,
                exp
            );
            assert!((set.states[z].reference.im).abs() < 1e-15);
        }
    }

    #[test]
    fn all_zero_intensities_degenerate_to_vacuum() {
        let p = ProtocolParams::six_state(0.0, 0.0, 0.0, 0.0, 0.3, 1.1).unwrap();
        let set = build_state_set(&p).unwrap();
        for z in 0..6 {
            for zp in 0..6 {
                assert!((set.overlap(z, zp) - c(1.0, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bb84_preset_matches_four_state_list() {
        let p = ProtocolParams::bb84_phase(0.25).unwrap();
        let set = build_state_set(&p).unwrap();
        assert_eq!(set.len(), 4);
        let a = 0.5;
        let expected = [c(a, 0.0), c(-a, 0.0), c(0.0, a), c(0.0, -a)];
        for (z, exp) in expected.iter().enumerate() {
            assert!((set.states[z].reference - c(a, 0.0)).norm() < 1e-15);
            assert!((set.states[z].signal - exp).norm() < 1e-15);
        }
    }

    #[test]
    fn negative_intensity_rejected() {
        assert!(matches!(
            ProtocolParams::six_state(-0.1, 0.2, 0.2, 0.1, 0.0, 0.0),
            Err(StatesError::InvalidIntensity { name: "mu1", .. })
        ));
        assert!(ProtocolParams::bb84_phase(-1e-9).is_err());
    }

    #[test]
    fn phases_reduced_to_unit_circle() {
        let p = ProtocolParams::six_state(0.1, 0.1, 0.1, 0.1, -0.5, 7.0).unwrap();
        assert!((0.0..std::f64::consts::TAU).contains(&p.theta1));
        assert!((0.0..std::f64::consts::TAU).contains(&p.theta2));
        assert!((p.theta1 - (std::f64::consts::TAU - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn opposite_sign_overlap_is_exp_minus_one() {
        let a = CoherentAmplitude::new(c(0.3, 0.0), c(0.5f64.sqrt(), 0.0));
        let b = CoherentAmplitude::new(c(0.3, 0.0), c(-(0.5f64.sqrt()), 0.0));
        let got = overlap(&a, &b);
        assert!((got - c((-1.0f64).exp(), 0.0)).norm() < 1e-14);
        // cross-check against the Fock oracle at cutoff 60
        let oracle = fock_overlap_oracle(&a, &b, 60).unwrap();
        assert!((got - oracle).norm() < 1e-12);
    }

    #[test]
    fn self_overlap_is_one() {
        let a = CoherentAmplitude::new(c(0.4, 0.2), c(-0.3, 0.9));
        assert!((overlap(&a, &a) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn quarter_turn_overlap_is_complex() {
        let mu = 0.2f64;
        let a = CoherentAmplitude::new(c(0.0, 0.0), c(mu.sqrt(), 0.0));
        let b = CoherentAmplitude::new(c(0.0, 0.0), c(0.0, mu.sqrt()));
        let got = overlap(&a, &b);
        let expected = Complex64::new(-mu, mu).exp();
        assert!((got - expected).norm() < 1e-14);
        assert!((got.norm() - (-mu).exp()).abs() < 1e-14);
        let oracle = fock_overlap_oracle(&a, &b, 60).unwrap();
        assert!((got - oracle).norm() < 1e-12);
    }

    #[test]
    fn fock_oracle_vacuum_is_exact_at_cutoff_one() {
        let v = CoherentAmplitude::new(c(0.0, 0.0), c(0.0, 0.0));
        let got = fock_overlap_oracle(&v, &v, 1).unwrap();
        assert_eq!(got, c(1.0, 0.0));
    }

    #[test]
    fn fock_oracle_rejects_zero_cutoff() {
        let v = CoherentAmplitude::new(c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            fock_overlap_oracle(&v, &v, 0),
            Err(StatesError::InvalidCutoff(0))
        ));
    }

    #[test]
    fn fock_oracle_truncation_error_visible_at_low_cutoff() {
        let mu = 2.0f64;
        let a = CoherentAmplitude::new(c(0.0, 0.0), c(mu.sqrt(), 0.0));
        let b = CoherentAmplitude::new(c(0.0, 0.0), c(-(mu.sqrt()), 0.0));
        let truncated = fock_overlap_oracle(&a, &b, 2).unwrap();
        let exact = overlap(&a, &b);
        assert!((truncated - exact).norm() > 1e-3);
    }

    /// Minimum eigenvalue of a Hermitian matrix via its real embedding.
    fn min_eig_hermitian(m: &DMatrix<Complex64>) -> f64 {
        let d = m.nrows();
        let mut r = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                r[(i, j)] = m[(i, j)].re;
                r[(i + d, j + d)] = m[(i, j)].re;
                r[(i, j + d)] = -m[(i, j)].im;
                r[(i + d, j)] = m[(i, j)].im;
            }
        }
        r.symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    proptest! {
        #[test]
        fn overlap_matrix_is_hermitian_psd_unit_diagonal(
            mu1 in 0.0..1.5f64, mu2 in 0.0..1.5f64, mu3 in 0.0..1.5f64,
            mu4 in 0.0..1.5f64, t1 in 0.0..PI, t2 in 0.0..PI,
        ) {
            let p = ProtocolParams::six_state(mu1, mu2, mu3, mu4, t1, t2).unwrap();
            let set = build_state_set(&p).unwrap();
            let lam = &set.overlaps;
            for z in 0..6 {
                prop_assert!((lam[(z, z)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                for zp in 0..6 {
                    prop_assert!((lam[(z, zp)] - lam[(zp, z)].conj()).norm() < 1e-12);
                    prop_assert!(lam[(z, zp)].norm() <= 1.0 + 1e-12);
                }
            }
            prop_assert!(min_eig_hermitian(lam) >= -1e-10);
        }

        #[test]
        fn overlap_agrees_with_fock_oracle(
            ar in -1.4..1.4f64, ai in -1.4..1.4f64,
            br in -1.4..1.4f64, bi in -1.4..1.4f64,
        ) {
            // |amplitude|² ≤ 2 per mode keeps cutoff 80 far past the Poisson tail.
            let a = CoherentAmplitude::new(c(ar, ai), c(ai, ar));
            let b = CoherentAmplitude::new(c(br, bi), c(bi, br));
            let closed = overlap(&a, &b);
            let oracle = fock_overlap_oracle(&a, &b, 80).unwrap();
            prop_assert!((closed - oracle).norm() < 1e-10);
        }

        #[test]
        fn overlaps_are_phase_covariant(
            mu1 in 0.0..1.0f64, mu4 in 0.0..1.0f64, t in 0.0..PI, phase in 0.0..PI,
        ) {
            let p = ProtocolParams::six_state(mu1, mu1, mu1, mu4, t, t).unwrap();
            let set = build_state_set(&p).unwrap();
            let rot = Complex64::from_polar(1.0, phase);
            let rotated: Vec<_> = set
                .states
                .iter()
                .map(|s| CoherentAmplitude::new(s.reference * rot, s.signal * rot))
                .collect();
            for z in 0..6 {
                for zp in 0..6 {
                    let o = overlap(&rotated[z], &rotated[zp]);
                    prop_assert!((o - set.overlap(z, zp)).norm() < 1e-12);
                }
            }
        }
    }
}
