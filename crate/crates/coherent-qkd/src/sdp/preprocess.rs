//! Rank-revealing removal of dependent equality constraints.
//!
//! Canonical-word equalities generate redundancies once facial reduction or
//! degenerate parameters enter; interior-point Schur systems need full row
//! rank. Constraints are orthogonalized in input order by sparse modified
//! Gram–Schmidt on their svec representations (off-diagonal entries scaled
//! by √2 so plain Euclidean inner products match `Tr(A·B)`). A row whose
//! residual norm falls below `rank_tol` times its own norm is dependent and
//! is dropped after checking that its right-hand side is consistent with
//! the rows that span it.

use super::SparseSym;
use std::collections::{BTreeMap, HashMap};

/// Outcome of constraint preprocessing.
#[derive(Debug, Clone)]
pub struct IndependentSet {
    /// Indices of retained (independent) constraints, in input order.
    pub kept: Vec<usize>,
    /// First dependent row whose right-hand side contradicts the span, with
    /// the size of the mismatch. Signals an infeasible equality system.
    pub inconsistent: Option<(usize, f64)>,
}

type Coord = (u32, u32);
type SparseVec = BTreeMap<Coord, f64>;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn svec(matrix: &SparseSym) -> SparseVec {
    let mut v = SparseVec::new();
    for &(i, j, val) in matrix.upper_entries() {
        let scaled = if i == j { val } else { SQRT2 * val };
        *v.entry((i, j)).or_insert(0.0) += scaled;
    }
    v.retain(|_, val| *val != 0.0);
    v
}

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(k, va)| large.get(k).map(|vb| va * vb))
        .sum()
}

fn norm(a: &SparseVec) -> f64 {
    a.values().map(|v| v * v).sum::<f64>().sqrt()
}

/// Select a maximal independent subset of `constraints` in input order.
///
/// `rank_tol` is the relative residual threshold (the contract default is
/// 1e−10).
pub fn select_independent_constraints(
    constraints: &[(SparseSym, f64)],
    rank_tol: f64,
) -> IndependentSet {
    let mut kept: Vec<usize> = Vec::new();
    let mut basis: Vec<SparseVec> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // coordinate → basis vectors supported there
    let mut coord_index: HashMap<Coord, Vec<usize>> = HashMap::new();
    let mut inconsistent = None;

    for (k, (matrix, b_k)) in constraints.iter().enumerate() {
        let mut residual = svec(matrix);
        let row_norm = norm(&residual);
        if row_norm == 0.0 {
            if b_k.abs() > 1e-8 && inconsistent.is_none() {
                inconsistent = Some((k, b_k.abs()));
            }
            continue;
        }
        // Candidates: basis vectors sharing support. Orthogonality of the
        // basis makes vectors outside this set irrelevant.
        let mut candidates: Vec<usize> = residual
            .keys()
            .filter_map(|c| coord_index.get(c))
            .flatten()
            .copied()
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut b_res = *b_k;
        // Two MGS passes for numerical hygiene.
        for _ in 0..2 {
            for &t in &candidates {
                let c = dot(&basis[t], &residual);
                if c == 0.0 {
                    continue;
                }
                for (coord, val) in &basis[t] {
                    *residual.entry(*coord).or_insert(0.0) -= c * val;
                }
                b_res -= c * beta[t];
            }
        }
        residual.retain(|_, v| *v != 0.0);
        let res_norm = norm(&residual);
        if res_norm <= rank_tol * row_norm {
            let mismatch = b_res.abs();
            if mismatch > 1e-8 * (1.0 + b_k.abs()) && inconsistent.is_none() {
                inconsistent = Some((k, mismatch));
            }
            continue;
        }
        for v in residual.values_mut() {
            *v /= res_norm;
        }
        let id = basis.len();
        for coord in residual.keys() {
            coord_index.entry(*coord).or_default().push(id);
        }
        basis.push(residual);
        beta.push(b_res / res_norm);
        kept.push(k);
    }

    IndependentSet { kept, inconsistent }
}
