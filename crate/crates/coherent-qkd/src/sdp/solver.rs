//! Infeasible-start primal-dual predictor-corrector interior-point method
//! with Nesterov–Todd scaling, for dense SDPs in equality form.
//!
//! Internally the problem is posed as `min ⟨Ĉ,X⟩ s.t. ⟨A_k,X⟩ = b_k, X ⪰ 0`
//! with the objective normalized to unit Frobenius norm; maximization and
//! scaling are undone on exit. The NT scaling point `W` (the unique PD
//! matrix with `W·Z·W = X`) symmetrizes the Schur complement
//! `M_kl = Tr(A_k·W·A_l·W)`, which is assembled from the sparse constraint
//! entries and factored once per iteration.

use super::preprocess::select_independent_constraints;
use super::{SdpError, SdpProblem};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Solver knobs. Defaults: relative gap 1e−8, feasibility 1e−8, 200
/// iterations, rank threshold 1e−10 for dependent-constraint removal.
#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            rank_tol: 1e-10,
        }
    }
}

impl SdpOptions {
    /// Same tolerance for gap and feasibility.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            gap_tol: tol,
            feas_tol: tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

/// Snapshot of one iteration, in the orientation of the original problem.
#[derive(Debug, Clone, Copy)]
pub struct IterateRecord {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Primal matrix (dimension of the problem as given).
    pub x: DMatrix<f64>,
    /// Dual vector, one entry per original constraint (zero where the
    /// constraint was removed as dependent).
    pub y: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Relative duality gap `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub iterates: Vec<IterateRecord>,
    pub dropped_constraints: Vec<usize>,
}

struct Workspace {
    dim: usize,
    /// Full (mirror-expanded) entry lists of the kept constraints.
    a_full: Vec<Vec<(u32, u32, f64)>>,
    b: DVector<f64>,
    c_hat: DMatrix<f64>,
}

impl Workspace {
    fn a_dot(&self, k: usize, m: &DMatrix<f64>) -> f64 {
        self.a_full[k]
            .iter()
            .map(|&(i, j, v)| v * m[(i as usize, j as usize)])
            .sum()
    }

    fn a_apply(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_fn(self.a_full.len(), |k, _| self.a_dot(k, x))
    }

    fn a_star(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, entries) in self.a_full.iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for &(i, j, v) in entries {
                out[(i as usize, j as usize)] += yk * v;
            }
        }
        out
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest step α with `S + α·dS ⪰ 0`, given the Cholesky factor of `S`.
fn max_psd_step(chol_l: &DMatrix<f64>, ds: &DMatrix<f64>) -> f64 {
    let t1 = chol_l
        .solve_lower_triangular(ds)
        .expect("cholesky factor is nonsingular");
    let y = chol_l
        .solve_lower_triangular(&t1.transpose())
        .expect("cholesky factor is nonsingular");
    let lambda_min = sym(&y)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if lambda_min >= -1e-13 {
        f64::INFINITY
    } else {
        -1.0 / lambda_min
    }
}

fn cholesky_with_jitter(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let scale = m.diagonal().amax().max(1e-300);
    for exp in [-14.0f64, -12.0, -10.0, -8.0] {
        let jitter = scale * 10f64.powf(exp);
        let mut mj = m.clone();
        for i in 0..m.nrows() {
            mj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(mj) {
            return Some(c);
        }
    }
    None
}

/// Solve the SDP. Failures surface as [`SdpStatus`] values, never panics;
/// `Err` is reserved for malformed inputs (tolerance below 1e−10,
/// mismatched dimensions).
pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution, SdpError> {
    if options.gap_tol < 1e-10 || options.feas_tol < 1e-10 {
        return Err(SdpError::ToleranceTooTight(
            options.gap_tol.min(options.feas_tol),
        ));
    }
    let d = problem.dim;
    for (a, _) in &problem.constraints {
        if a.dim() != d {
            return Err(SdpError::DimensionMismatch {
                expected: d,
                got: a.dim(),
            });
        }
    }
    if problem.objective.dim() != d {
        return Err(SdpError::DimensionMismatch {
            expected: d,
            got: problem.objective.dim(),
        });
    }

    let sign = if problem.maximize { -1.0 } else { 1.0 };
    let c_orig = problem.objective.to_dense();
    let obj_scale = c_orig.norm().max(1.0);
    let c_hat = &c_orig * (sign / obj_scale);

    let pre = select_independent_constraints(&problem.constraints, options.rank_tol);
    let dropped: Vec<usize> = (0..problem.constraints.len())
        .filter(|k| !pre.kept.contains(k))
        .collect();
    let report = |x: DMatrix<f64>,
                  y_kept: DVector<f64>,
                  status: SdpStatus,
                  iterations: usize,
                  iterates: Vec<IterateRecord>| {
        let primal_value = (&c_orig * &x).trace();
        let mut y = vec![0.0; problem.constraints.len()];
        for (slot, &k) in pre.kept.iter().enumerate() {
            y[k] = sign * obj_scale * y_kept[slot];
        }
        let dual_value: f64 = problem
            .constraints
            .iter()
            .zip(y.iter())
            .map(|((_, b), yk)| b * yk)
            .sum();
        let gap = (primal_value - dual_value).abs() / (1.0 + primal_value.abs() + dual_value.abs());
        SdpSolution {
            x,
            y,
            primal_value,
            dual_value,
            gap,
            status,
            iterations,
            iterates,
            dropped_constraints: dropped.clone(),
        }
    };

    if pre.inconsistent.is_some() {
        return Ok(report(
            DMatrix::zeros(d, d),
            DVector::zeros(pre.kept.len()),
            SdpStatus::Infeasible,
            0,
            Vec::new(),
        ));
    }

    let ws = Workspace {
        dim: d,
        a_full: pre
            .kept
            .iter()
            .map(|&k| problem.constraints[k].0.full_entries())
            .collect(),
        b: DVector::from_iterator(pre.kept.len(), pre.kept.iter().map(|&k| problem.constraints[k].1)),
        c_hat,
    };
    let m = ws.a_full.len();

    if m == 0 {
        // min ⟨Ĉ,X⟩ over the PSD cone: 0 at the apex, or unbounded below.
        let lambda_min = ws
            .c_hat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let status = if lambda_min >= -1e-12 {
            SdpStatus::Optimal
        } else {
            SdpStatus::Unbounded
        };
        return Ok(report(DMatrix::zeros(d, d), DVector::zeros(0), status, 0, Vec::new()));
    }

    // Scaled-identity start.
    let norm_b_max = ws.b.amax();
    let norm_a_max = ws
        .a_full
        .iter()
        .map(|e| e.iter().map(|&(_, _, v)| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let sqrt_d = (d as f64).sqrt();
    let tau_p = 10f64
        .max(sqrt_d)
        .max(d as f64 * (1.0 + norm_b_max) / (1.0 + norm_a_max));
    let tau_d = 10f64.max(sqrt_d).max(norm_a_max).max(ws.c_hat.norm());

    let mut x = DMatrix::<f64>::identity(d, d) * tau_p;
    let mut z = DMatrix::<f64>::identity(d, d) * tau_d;
    let mut y = DVector::<f64>::zeros(m);

    let norm_b = 1.0 + ws.b.norm();
    let norm_c = 1.0 + ws.c_hat.norm();
    let mut iterates: Vec<IterateRecord> = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;

    for iter in 0..options.max_iter {
        iterations = iter;
        let ax = ws.a_apply(&x);
        let r_p = &ws.b - &ax;
        let r_d = &ws.c_hat - &z - ws.a_star(&y);
        let mu = (&x * &z).trace() / d as f64;
        let pobj = (&ws.c_hat * &x).trace();
        let dobj = ws.b.dot(&y);
        let prim_inf = r_p.norm() / norm_b;
        let dual_inf = r_d.norm() / norm_c;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        iterates.push(IterateRecord {
            primal_objective: sign * obj_scale * pobj,
            dual_objective: sign * obj_scale * dobj,
            primal_infeasibility: prim_inf,
            dual_infeasibility: dual_inf,
            mu,
        });

        if prim_inf <= options.feas_tol && dual_inf <= options.feas_tol && rel_gap <= options.gap_tol
        {
            status = SdpStatus::Optimal;
            break;
        }
        if iter >= 10 && dobj > 1e8 && dual_inf < 1e-6 {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter >= 10 && pobj < -1e8 && prim_inf < 1e-6 {
            status = SdpStatus::Unbounded;
            break;
        }

        // NT scaling: X = Lx·Lxᵀ, Z = Lz·Lzᵀ, Lzᵀ·Lx = U·Σ·Vᵀ gives
        // G = Lx·V·Σ^{−1/2} with G·Gᵀ = W, and G^{−T} = Lz·U·Σ^{−1/2};
        // both scaled variables equal Σ.
        let (lx, lz) = match (cholesky_with_jitter(&x), cholesky_with_jitter(&z)) {
            (Some(cx), Some(cz)) => (cx.l(), cz.l()),
            _ => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let svd = (lz.transpose() * &lx).svd(true, true);
        let (u, v_t) = match (&svd.u, &svd.v_t) {
            (Some(u), Some(v_t)) => (u.clone(), v_t.clone()),
            _ => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let sigma = svd.singular_values.clone();
        if sigma.iter().any(|&s| !(s > 0.0)) {
            status = SdpStatus::NumericalFailure;
            break;
        }
        let inv_sqrt_sigma = DVector::from_iterator(d, sigma.iter().map(|&s| 1.0 / s.sqrt()));
        let mut g = &lx * v_t.transpose();
        let mut g_inv_t = &lz * u;
        for j in 0..d {
            let f = inv_sqrt_sigma[j];
            g.column_mut(j).scale_mut(f);
            g_inv_t.column_mut(j).scale_mut(f);
        }
        let w = &g * g.transpose();

        // Schur complement M_kl = Tr(A_k·W·A_l·W), symmetric PD.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let mut s = 0.0;
                for &(i, j, v) in &ws.a_full[k] {
                    let (i, j) = (i as usize, j as usize);
                    for &(r, t, u_v) in &ws.a_full[l] {
                        s += v * u_v * w[(j, r as usize)] * w[(t as usize, i)];
                    }
                }
                schur[(k, l)] = s;
                schur[(l, k)] = s;
            }
        }
        let schur_chol = match cholesky_with_jitter(&schur) {
            Some(c) => c,
            None => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        // The Schur system inherits the conditioning of the feasible set's
        // interior width; refine against the unregularized matrix to keep
        // the primal residual contracting all the way to tolerance.
        let solve_refined = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut dy = schur_chol.solve(rhs);
            for _ in 0..2 {
                let res = rhs - &schur * &dy;
                dy += schur_chol.solve(&res);
            }
            dy
        };

        let w_rd_w = &w * &r_d * &w;
        let a_wrdw = ws.a_apply(&w_rd_w);

        // Predictor (affine direction).
        let rhs_aff = &ws.b + &a_wrdw;
        let dy_aff = solve_refined(&rhs_aff);
        let dz_aff = &r_d - ws.a_star(&dy_aff);
        let dx_aff = -(&x) - &w * &dz_aff * &w;
        let alpha_p_aff = max_psd_step(&lx, &dx_aff).min(1.0);
        let alpha_d_aff = max_psd_step(&lz, &dz_aff).min(1.0);
        let mu_aff = ((&x + &dx_aff * alpha_p_aff) * (&z + &dz_aff * alpha_d_aff))
            .trace()
            .max(0.0)
            / d as f64;
        let mut sigma_c = (mu_aff / mu).powi(3).clamp(1e-10, 0.9999);
        if alpha_p_aff.min(alpha_d_aff) < 0.05 {
            sigma_c = sigma_c.max(0.9);
        }

        // Corrector with Mehrotra second-order term in the scaled space.
        let dx_hat_aff = g_inv_t.transpose() * &dx_aff * &g_inv_t;
        let dz_hat_aff = g.transpose() * &dz_aff * &g;
        let cross = &dx_hat_aff * &dz_hat_aff;
        let h_corr = (&cross + cross.transpose()) * 0.5;
        let mut rhs_mat = -h_corr;
        for i in 0..d {
            rhs_mat[(i, i)] += sigma_c * mu - sigma[i] * sigma[i];
        }
        // (dX̂ + dẐ)_ij = 2·RHS_ij/(σ_i + σ_j)
        let mut t_mat = rhs_mat;
        for i in 0..d {
            for j in 0..d {
                t_mat[(i, j)] *= 2.0 / (sigma[i] + sigma[j]);
            }
        }
        let g_t_gt = &g * &t_mat * g.transpose();
        let a_gtgt = ws.a_apply(&g_t_gt);
        let rhs = &r_p - &a_gtgt + &a_wrdw;
        let dy = solve_refined(&rhs);
        let dz = &r_d - ws.a_star(&dy);
        let dz_hat = g.transpose() * &dz * &g;
        let dx_hat = &t_mat - &dz_hat;
        let dx = sym(&(&g * &dx_hat * g.transpose()));

        let mut alpha_p = (0.98 * max_psd_step(&lx, &dx)).min(1.0);
        let mut alpha_d = (0.98 * max_psd_step(&lz, &dz)).min(1.0);
        // Floating-point noise can push an update just outside the cone
        // when the factorization needed jitter; back off until the plain
        // Cholesky accepts the new iterate.
        let mut ok = false;
        for _ in 0..30 {
            let x_new = sym(&(&x + &dx * alpha_p));
            let z_new = sym(&(&z + &dz * alpha_d));
            if Cholesky::new(x_new.clone()).is_some() && Cholesky::new(z_new.clone()).is_some() {
                x = x_new;
                z = z_new;
                y += &dy * alpha_d;
                ok = true;
                break;
            }
            alpha_p *= 0.8;
            alpha_d *= 0.8;
        }
        if !ok {
            status = SdpStatus::NumericalFailure;
            break;
        }
    }

    if status == SdpStatus::MaxIter {
        iterations = options.max_iter;
    }
    Ok(report(x, y, status, iterations, iterates))
}
