//! Dense semidefinite programming: maximize a real linear functional over
//! Hermitian PSD matrices under linear equality constraints.
//!
//! Hermitian data is reduced to a real symmetric problem through the
//! standard embedding `H = A + iB ↦ [[A, −B], [B, A]]`; the factor-2 trace
//! double counting is folded into the embedded selectors, so functional
//! values carry over unchanged. The solver is an infeasible-start
//! Nesterov–Todd-scaled predictor-corrector interior-point method for the
//! dense regime (dimensions up to a few hundred).

mod export;
mod preprocess;
mod solver;
mod verify;

pub use export::export_sdpa_sparse;
pub use preprocess::select_independent_constraints;
pub use solver::{solve, IterateRecord, SdpOptions, SdpSolution, SdpStatus};
pub use verify::{verify_solution, VerificationCheck, VerificationReport};

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum SdpError {
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solver tolerance must be >= 1e-10, got {0:.3e}")]
    ToleranceTooTight(f64),
    #[error("verification requires an optimal solution, status was {0:?}")]
    NotOptimal(SdpStatus),
}

/// Sparse Hermitian matrix in upper-triangle storage: an entry `c` at
/// `(p, q)` with `p < q` stands for `c·E_pq + conj(c)·E_qp`, a diagonal
/// entry for `Re(c)·E_pp`. Functionals `Tr(F·G)` on Hermitian `G` are real
/// by construction.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    dim: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl HermitianMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(p, q), &c)| (p, q, c))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Add `coeff · Re(G_pq)` to the functional this matrix represents.
    pub fn add_re_entry(&mut self, p: usize, q: usize, coeff: f64) {
        let (a, b) = if p <= q { (p, q) } else { (q, p) };
        let c = if a == b { coeff } else { coeff / 2.0 };
        *self.entries.entry((a, b)).or_insert(Complex64::ZERO) += Complex64::new(c, 0.0);
    }

    /// Add `coeff · Im(G_pq)` to the functional; requires `p != q`.
    pub fn add_im_entry(&mut self, p: usize, q: usize, coeff: f64) {
        assert_ne!(p, q, "diagonal of a Hermitian matrix has no imaginary part");
        let (a, b, sign) = if p < q { (p, q, 1.0) } else { (q, p, -1.0) };
        *self.entries.entry((a, b)).or_insert(Complex64::ZERO) +=
            Complex64::new(0.0, sign * coeff / 2.0);
    }

    /// Functional value `Tr(F·G)` for Hermitian `G`.
    pub fn value(&self, g: &DMatrix<Complex64>) -> f64 {
        let mut sum = 0.0;
        for (&(p, q), &c) in &self.entries {
            let gpq = g[(p, q)];
            if p == q {
                sum += c.re * gpq.re;
            } else {
                sum += 2.0 * (c.re * gpq.re + c.im * gpq.im);
            }
        }
        sum
    }

    pub fn scale(&mut self, factor: f64) {
        for c in self.entries.values_mut() {
            *c *= factor;
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (&(p, q), &c) in &self.entries {
            if p == q {
                m[(p, p)] += Complex64::new(c.re, 0.0);
            } else {
                m[(p, q)] += c;
                m[(q, p)] += c.conj();
            }
        }
        m
    }

    /// Validating constructor from a dense matrix.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self, SdpError> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(SdpError::DimensionMismatch {
                expected: d,
                got: m.ncols(),
            });
        }
        let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let mut dev = 0.0f64;
        for p in 0..d {
            for q in p..d {
                dev = dev.max((m[(p, q)] - m[(q, p)].conj()).norm());
            }
        }
        if dev > 1e-12 * scale {
            return Err(SdpError::NotHermitian(dev));
        }
        let mut out = Self::new(d);
        for p in 0..d {
            for q in p..d {
                let c = if p == q {
                    Complex64::new(m[(p, p)].re, 0.0)
                } else {
                    (m[(p, q)] + m[(q, p)].conj()) / 2.0
                };
                if c.norm() > 0.0 {
                    out.entries.insert((p, q), c);
                }
            }
        }
        Ok(out)
    }
}

/// A Hermitian SDP prior to real embedding.
#[derive(Debug, Clone)]
pub struct HermitianProblem {
    pub dim: usize,
    pub objective: HermitianMatrix,
    pub constraints: Vec<(HermitianMatrix, f64)>,
    pub maximize: bool,
}

/// Sparse real symmetric matrix in upper-triangle storage; an entry
/// `(i, j, v)` with `i < j` stands for `v` at both `(i,j)` and `(j,i)`.
#[derive(Debug, Clone)]
pub struct SparseSym {
    dim: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SparseSym {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    /// Upper-triangle entries (i ≤ j).
    pub fn upper_entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((a as u32, b as u32, v));
    }

    /// Sort and merge duplicate coordinates.
    pub fn coalesce(&mut self) {
        self.entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut out: Vec<(u32, u32, f64)> = Vec::with_capacity(self.entries.len());
        for &(i, j, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|&(_, _, v)| v != 0.0);
        self.entries = out;
    }

    /// All matrix entries including mirrored lower-triangle ones.
    pub fn full_entries(&self) -> Vec<(u32, u32, f64)> {
        let mut full = Vec::with_capacity(2 * self.entries.len());
        for &(i, j, v) in &self.entries {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        full
    }

    /// `Tr(S·X)` for symmetric `X`.
    pub fn value(&self, x: &DMatrix<f64>) -> f64 {
        let mut sum = 0.0;
        for &(i, j, v) in &self.entries {
            let xij = x[(i as usize, j as usize)];
            sum += if i == j { v * xij } else { 2.0 * v * xij };
        }
        sum
    }

    /// `out += factor · S` as a dense matrix.
    pub fn add_to_dense(&self, factor: f64, out: &mut DMatrix<f64>) {
        for &(i, j, v) in &self.entries {
            out[(i as usize, j as usize)] += factor * v;
            if i != j {
                out[(j as usize, i as usize)] += factor * v;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        self.add_to_dense(1.0, &mut m);
        m
    }

    pub fn from_dense(m: &DMatrix<f64>, drop_tol: f64) -> Self {
        let d = m.nrows();
        let mut out = Self::new(d);
        for i in 0..d {
            for j in i..d {
                let v = (m[(i, j)] + m[(j, i)]) / 2.0;
                if v.abs() > drop_tol {
                    out.add(i, j, v);
                }
            }
        }
        out.coalesce();
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for &(i, j, v) in &self.entries {
            sum += if i == j { v * v } else { 2.0 * v * v };
        }
        sum.sqrt()
    }
}

/// A real symmetric SDP in standard equality form:
/// optimize `Tr(C·X)` subject to `Tr(A_k·X) = b_k` and `X ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: SparseSym,
    pub constraints: Vec<(SparseSym, f64)>,
    pub maximize: bool,
}

/// Real symmetric embedding of a Hermitian problem.
///
/// Every Hermitian selector `H = A + iB` maps to `[[A, −B], [B, A]] / 2`;
/// the halving de-embeds the doubled trace so that
/// `Tr(S·[[ReG, −ImG],[ImG, ReG]]) = Tr(H·G)` exactly, and any symmetric
/// PSD solution of the embedded problem projects back onto a Hermitian PSD
/// `G` with the same objective value.
pub fn real_embed(problem: &HermitianProblem) -> Result<SdpProblem, SdpError> {
    let d = problem.dim;
    let embed = |h: &HermitianMatrix| -> Result<SparseSym, SdpError> {
        if h.dim() != d {
            return Err(SdpError::DimensionMismatch {
                expected: d,
                got: h.dim(),
            });
        }
        let mut s = SparseSym::new(2 * d);
        for (p, q, c) in h.entries() {
            if p == q {
                if c.im.abs() > 1e-12 * c.norm().max(1.0) {
                    return Err(SdpError::NotHermitian(c.im.abs()));
                }
                s.add(p, p, c.re / 2.0);
                s.add(p + d, p + d, c.re / 2.0);
            } else {
                s.add(p, q, c.re / 2.0);
                s.add(p + d, q + d, c.re / 2.0);
                s.add(q, p + d, c.im / 2.0);
                s.add(p, q + d, -c.im / 2.0);
            }
        }
        s.coalesce();
        Ok(s)
    };
    Ok(SdpProblem {
        dim: 2 * d,
        objective: embed(&problem.objective)?,
        constraints: problem
            .constraints
            .iter()
            .map(|(h, b)| Ok((embed(h)?, *b)))
            .collect::<Result<_, SdpError>>()?,
        maximize: problem.maximize,
    })
}

/// Recover the Hermitian matrix from a solution of the embedded problem:
/// `G = (X₁₁ + X₂₂)/2 + i·(X₂₁ − X₂₁ᵀ)/2`.
pub fn unembed_solution(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    let d = x.nrows() / 2;
    DMatrix::from_fn(d, d, |p, q| {
        Complex64::new(
            (x[(p, q)] + x[(p + d, q + d)]) / 2.0,
            (x[(p + d, q)] - x[(q + d, p)]) / 2.0,
        )
    })
}

/// Facial reduction: restrict the problem to the orthogonal complement of
/// directions known to be annihilated by every feasible matrix.
///
/// Constraints whose selector vanishes on the complement are kept as empty
/// selectors; the solver's preprocessing then either drops them (value 0)
/// or reports infeasibility.
pub fn project_out_nulls(
    problem: &HermitianProblem,
    nulls: &[Vec<(usize, Complex64)>],
) -> HermitianProblem {
    let d = problem.dim;
    // Orthonormalize the null directions.
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for null in nulls {
        let mut v = vec![Complex64::ZERO; d];
        for &(i, c) in null {
            v[i] += c;
        }
        mgs_project(&mut v, &basis);
        let norm = vec_norm(&v);
        if norm > 1e-9 {
            v.iter_mut().for_each(|c| *c /= norm);
            basis.push(v);
        }
    }
    let k = basis.len();
    if k == 0 {
        return problem.clone();
    }
    // Complete with identity columns to an orthonormal basis of the
    // complement; columns stay supported near their seed coordinate.
    let mut complement: Vec<Vec<Complex64>> = Vec::new();
    for i in 0..d {
        let mut v = vec![Complex64::ZERO; d];
        v[i] = Complex64::new(1.0, 0.0);
        mgs_project(&mut v, &basis);
        mgs_project(&mut v, &complement);
        let norm = vec_norm(&v);
        if norm > 1e-6 {
            v.iter_mut().for_each(|c| *c /= norm);
            complement.push(v);
        }
    }
    debug_assert_eq!(complement.len(), d - k);
    let dk = complement.len();
    let b_mat = DMatrix::from_fn(d, dk, |r, c| complement[c][r]);
    let transform = |h: &HermitianMatrix| -> HermitianMatrix {
        let dense = h.to_dense();
        let reduced = b_mat.adjoint() * dense * &b_mat;
        let drop = 1e-14 * h.max_abs().max(1e-300);
        let mut out = HermitianMatrix::new(dk);
        for p in 0..dk {
            for q in p..dk {
                let c = if p == q {
                    Complex64::new(reduced[(p, p)].re, 0.0)
                } else {
                    (reduced[(p, q)] + reduced[(q, p)].conj()) / 2.0
                };
                if c.norm() > drop {
                    out.entries.insert((p, q), c);
                }
            }
        }
        out
    };
    HermitianProblem {
        dim: dk,
        objective: transform(&problem.objective),
        constraints: problem
            .constraints
            .iter()
            .map(|(h, b)| (transform(h), *b))
            .collect(),
        maximize: problem.maximize,
    }
}

fn mgs_project(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let inner: Complex64 = b
            .iter()
            .zip(v.iter())
            .map(|(bi, vi)| bi.conj() * *vi)
            .sum();
        for (vi, bi) in v.iter_mut().zip(b.iter()) {
            *vi -= inner * *bi;
        }
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
