//! Independent verification of solver output.
//!
//! The checks recompute everything from scratch: constraint residuals by
//! direct sparse dots, the duality gap from the reported values, and the
//! eigenvalue floor of the primal matrix with a self-contained cyclic
//! Jacobi eigensolver rather than the solver's factorizations.

use super::{SdpError, SdpProblem, SdpSolution, SdpStatus};
use nalgebra::DMatrix;

/// One verification check with its measured value and threshold.
#[derive(Debug, Clone)]
pub struct VerificationCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<VerificationCheck>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Smallest eigenvalue by cyclic Jacobi rotations. Deliberately separate
/// from the solver's linear algebra.
pub fn jacobi_min_eigenvalue(matrix: &DMatrix<f64>) -> f64 {
    let n = matrix.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut a = matrix.clone();
    let scale = a.iter().map(|v| v.abs()).fold(1e-300, f64::max);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-16 * scale {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
}

/// Re-derive optimality evidence for a claimed-optimal solution: primal
/// eigenvalue floor, per-constraint residuals, dual slack eigenvalue floor,
/// and the relative duality gap, each at 10× the stated tolerance.
pub fn verify_solution(
    problem: &SdpProblem,
    solution: &SdpSolution,
    tol: f64,
) -> Result<VerificationReport, SdpError> {
    if solution.status != SdpStatus::Optimal {
        return Err(SdpError::NotOptimal(solution.status));
    }
    let slack = 10.0 * tol;
    let mut checks = Vec::new();

    let x_scale = 1.0 + solution.x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min_eig_x = jacobi_min_eigenvalue(&solution.x);
    checks.push(VerificationCheck {
        name: "primal PSD (min eigenvalue)".into(),
        value: min_eig_x,
        threshold: -slack * x_scale,
        pass: min_eig_x >= -slack * x_scale,
    });

    let mut worst_residual = 0.0f64;
    for (k, (a, b)) in problem.constraints.iter().enumerate() {
        let mut dot = 0.0;
        for &(i, j, v) in a.upper_entries() {
            let xij = solution.x[(i as usize, j as usize)];
            dot += if i == j { v * xij } else { 2.0 * v * xij };
        }
        let residual = (dot - b).abs() / (1.0 + b.abs());
        if residual > worst_residual {
            worst_residual = residual;
        }
        let _ = k;
    }
    checks.push(VerificationCheck {
        name: "constraint residuals".into(),
        value: worst_residual,
        threshold: slack,
        pass: worst_residual <= slack,
    });

    // dual slack: maximize → S = A*(y) − C ⪰ 0; minimize → S = C − A*(y)
    let d = problem.dim;
    let mut slack_mat = DMatrix::<f64>::zeros(d, d);
    for ((a, _), &yk) in problem.constraints.iter().zip(solution.y.iter()) {
        a.add_to_dense(yk, &mut slack_mat);
    }
    let obj_sign = if problem.maximize { -1.0 } else { 1.0 };
    problem.objective.add_to_dense(obj_sign, &mut slack_mat);
    if !problem.maximize {
        slack_mat = -slack_mat;
    }
    let s_scale = 1.0 + slack_mat.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min_eig_s = jacobi_min_eigenvalue(&slack_mat);
    checks.push(VerificationCheck {
        name: "dual slack PSD (min eigenvalue)".into(),
        value: min_eig_s,
        threshold: -slack * s_scale,
        pass: min_eig_s >= -slack * s_scale,
    });

    let gap = (solution.primal_value - solution.dual_value).abs()
        / (1.0 + solution.primal_value.abs() + solution.dual_value.abs());
    checks.push(VerificationCheck {
        name: "relative duality gap".into(),
        value: gap,
        threshold: slack,
        pass: gap <= slack,
    });

    Ok(VerificationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve, SdpOptions, SparseSym};

    fn example_problem() -> SdpProblem {
        let mut obj = SparseSym::new(2);
        obj.add(0, 1, 1.0);
        obj.coalesce();
        let mut c1 = SparseSym::new(2);
        c1.add(0, 0, 1.0);
        c1.coalesce();
        let mut c2 = SparseSym::new(2);
        c2.add(1, 1, 1.0);
        c2.coalesce();
        SdpProblem {
            dim: 2,
            objective: obj,
            constraints: vec![(c1, 0.5), (c2, 0.5)],
            maximize: true,
        }
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        // eigenvalues 2, 2 ± √2
        let min = jacobi_min_eigenvalue(&m);
        assert!((min - (2.0 - 2f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn optimal_solution_verifies() {
        let problem = example_problem();
        let sol = solve(&problem, &SdpOptions::default()).unwrap();
        let report = verify_solution(&problem, &sol, 1e-8).unwrap();
        assert!(report.all_pass(), "{:#?}", report.checks);
    }

    #[test]
    fn perturbed_solution_fails_residuals() {
        let problem = example_problem();
        let mut sol = solve(&problem, &SdpOptions::default()).unwrap();
        sol.x[(0, 0)] += 1e-3;
        let report = verify_solution(&problem, &sol, 1e-8).unwrap();
        assert!(!report.all_pass());
        let residual_check = report
            .checks
            .iter()
            .find(|c| c.name.contains("residual"))
            .unwrap();
        assert!(!residual_check.pass);
    }

    #[test]
    fn refuses_non_optimal_status() {
        let problem = example_problem();
        let mut sol = solve(&problem, &SdpOptions::default()).unwrap();
        sol.status = SdpStatus::MaxIter;
        assert!(matches!(
            verify_solution(&problem, &sol, 1e-8),
            Err(SdpError::NotOptimal(SdpStatus::MaxIter))
        ));
    }
}
