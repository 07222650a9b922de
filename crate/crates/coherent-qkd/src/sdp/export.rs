//! Export to the SDPA sparse interchange format (`.dat-s`) for
//! cross-validation against external solvers.
//!
//! The format's dual side is exactly our standard form: maximize
//! `tr(F₀·Y)` subject to `tr(F_i·Y) = c_i`, `Y ⪰ 0`. A minimization
//! problem is exported with the negated objective, noted in the comment
//! line.

use super::SdpProblem;
use std::fmt::Write as _;

/// Render the problem as an SDPA sparse-format string (one block).
pub fn export_sdpa_sparse(problem: &SdpProblem, comment: &str) -> String {
    let mut out = String::new();
    let flipped = !problem.maximize;
    let _ = writeln!(
        out,
        "\"{}{}\"",
        comment,
        if flipped {
            " (objective negated: source problem minimizes)"
        } else {
            ""
        }
    );
    let _ = writeln!(out, "{}", problem.constraints.len());
    let _ = writeln!(out, "1");
    let _ = writeln!(out, "{}", problem.dim);
    let rhs: Vec<String> = problem
        .constraints
        .iter()
        .map(|(_, b)| format!("{b:.16e}"))
        .collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    let obj_sign = if flipped { -1.0 } else { 1.0 };
    for &(i, j, v) in problem.objective.upper_entries() {
        let _ = writeln!(out, "0 1 {} {} {:.16e}", i + 1, j + 1, obj_sign * v);
    }
    for (k, (a, _)) in problem.constraints.iter().enumerate() {
        for &(i, j, v) in a.upper_entries() {
            let _ = writeln!(out, "{} 1 {} {} {:.16e}", k + 1, i + 1, j + 1, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::SparseSym;

    #[test]
    fn export_layout() {
        let mut obj = SparseSym::new(2);
        obj.add(0, 1, 1.0);
        obj.coalesce();
        let mut con = SparseSym::new(2);
        con.add(0, 0, 1.0);
        con.coalesce();
        let problem = SdpProblem {
            dim: 2,
            objective: obj,
            constraints: vec![(con, 0.5)],
            maximize: true,
        };
        let text = export_sdpa_sparse(&problem, "test problem");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "\"test problem\"");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert_eq!(lines[3], "2");
        assert!(lines[4].starts_with("5.0"));
        assert!(lines[5].starts_with("0 1 1 2 1.0"));
        assert!(lines[6].starts_with("1 1 1 1 1.0"));
    }
}
