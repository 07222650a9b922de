//! Block Gram (moment) matrices over operator words and the linear
//! constraint systems they impose.
//!
//! For a preparation set `{|φ_z⟩}` and an operator set `𝒮 = {w_1, …, w_m}`
//! the moment matrix is the `nm×nm` Hermitian PSD block matrix
//! `G[(z,i),(z',j)] = ⟨φ_z| w_i† w_j |φ_z'⟩`. Its entries are not free:
//! overlaps pin the identity-vs-identity entries, measured statistics pin
//! single-projector diagonal-block entries, and the projector algebra makes
//! whole families of positions carry the same canonical word. This module
//! emits those constraints in a solver-ready form, together with the
//! phase-error-rate objective.
//!
//! The default operator set is the reduced `{𝕀, B₀⁰, B₁⁰, B^∅}` per level,
//! with `B_y^1` eliminated through `B_y^1 = 𝕀 − B_y^0 − B^∅`.

pub mod words;

use crate::channel::{Basis, KeyBasisSummary, Outcome, StatisticsTable};
use crate::sdp::{HermitianMatrix, HermitianProblem};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub use words::{adjoint, canonicalize, generate_operator_set, OperatorSymbol, Word, WordError};

/// Probabilities this close to zero are treated as exact zeros when
/// deriving forced-null directions of the Gram matrix.
const PROB_ZERO_TOL: f64 = 1e-30;

#[derive(Debug, thiserror::Error)]
pub enum MomentError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("need at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("dimension mismatch: layout has {layout} states, {what} has {got}")]
    DimensionMismatch {
        layout: usize,
        what: &'static str,
        got: usize,
    },
    #[error("statistics table violates normalization by {0:.3e}")]
    InconsistentTable(f64),
    #[error("no-click probabilities differ across bases by {0:.3e}")]
    BasisDependentNoClick(f64),
    #[error("p_det = 0: phase-error objective undefined")]
    ZeroDetectionProbability,
    #[error("objective needs operator {0} in the operator set")]
    MissingObjectiveWord(String),
}

/// Index structure of the block Gram matrix: states are the outer blocks,
/// operator words the inner index.
#[derive(Debug, Clone)]
pub struct MomentLayout {
    n_states: usize,
    level: usize,
    reduced: bool,
    ops: Vec<Word>,
}

impl MomentLayout {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn reduced(&self) -> bool {
        self.reduced
    }

    pub fn ops(&self) -> &[Word] {
        &self.ops
    }

    /// Words per state block.
    pub fn m(&self) -> usize {
        self.ops.len()
    }

    /// Side length of the Gram matrix.
    pub fn dim(&self) -> usize {
        self.n_states * self.ops.len()
    }

    /// Row of `(state z, word i)`.
    pub fn index(&self, z: usize, i: usize) -> usize {
        debug_assert!(z < self.n_states && i < self.ops.len());
        z * self.ops.len() + i
    }

    /// Inverse of [`MomentLayout::index`].
    pub fn position(&self, row: usize) -> (usize, usize) {
        (row / self.ops.len(), row % self.ops.len())
    }

    fn word_index(&self, w: &Word) -> Option<usize> {
        self.ops.iter().position(|o| o == w)
    }
}

/// Build the layout for `n_states` blocks at the given hierarchy level.
pub fn build_layout(
    n_states: usize,
    level: usize,
    reduced: bool,
) -> Result<MomentLayout, MomentError> {
    if n_states < 2 {
        return Err(MomentError::TooFewStates(n_states));
    }
    let ops = generate_operator_set(level, reduced)?;
    Ok(MomentLayout {
        n_states,
        level,
        reduced,
        ops,
    })
}

/// Switches for the statistically under-determined choices: the protocol
/// table does not say whether test-state no-click probabilities and
/// key-state wrong-basis statistics are pinned or left free. Both default
/// to pinned.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintOptions {
    pub constrain_test_noclick: bool,
    pub constrain_key_wrong_basis: bool,
}

impl Default for ConstraintOptions {
    fn default() -> Self {
        Self {
            constrain_test_noclick: true,
            constrain_key_wrong_basis: true,
        }
    }
}

/// One linear equality `Tr(selector · G) = value` with a human-readable
/// label for dumps.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub selector: HermitianMatrix,
    pub value: f64,
    pub label: String,
}

/// Affine phase-error functional `e_ph = constant + Tr(selector · G)`.
/// The `1/(2·p_det)` normalization is folded into the selector so the
/// solver optimizes directly in phase-error units.
#[derive(Debug, Clone)]
pub struct Objective {
    pub constant: f64,
    pub selector: HermitianMatrix,
}

/// The complete constraint system of the moment-matrix SDP.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub n_states: usize,
    /// Pins of measured probabilities (the F_k of the program).
    pub data: Vec<Constraint>,
    /// Overlap pins, zero-word pins and canonical-word equalities
    /// (the R_k of the program).
    pub structural: Vec<Constraint>,
    pub objective: Objective,
    /// Directions provably annihilated by every feasible Gram matrix
    /// (exact-zero outcome probabilities, duplicate states). Projecting
    /// them out restores a strictly feasible interior for the solver.
    pub null_directions: Vec<Vec<(usize, Complex64)>>,
}

impl ConstraintSystem {
    pub fn n_constraints(&self) -> usize {
        self.data.len() + self.structural.len()
    }

    /// e_ph evaluated on an explicit Hermitian Gram matrix.
    pub fn objective_value(&self, g: &DMatrix<Complex64>) -> f64 {
        self.objective.constant + self.objective.selector.value(g)
    }

    /// Worst absolute residual of each constraint family on `g`.
    pub fn max_residuals(&self, g: &DMatrix<Complex64>) -> (f64, f64) {
        let worst = |set: &[Constraint]| {
            set.iter()
                .map(|c| (c.selector.value(g) - c.value).abs())
                .fold(0.0f64, f64::max)
        };
        (worst(&self.data), worst(&self.structural))
    }

    /// Package as a Hermitian SDP (maximize the phase-error functional).
    /// Null directions are projected out first when present.
    pub fn to_hermitian_sdp(&self) -> HermitianProblem {
        let problem = HermitianProblem {
            dim: self.dim,
            objective: self.objective.selector.clone(),
            constraints: self
                .data
                .iter()
                .chain(self.structural.iter())
                .map(|c| (c.selector.clone(), c.value))
                .collect(),
            maximize: true,
        };
        if self.null_directions.is_empty() {
            problem
        } else {
            crate::sdp::project_out_nulls(&problem, &self.null_directions)
        }
    }

    /// Human-readable listing of every constraint and its sparsity.
    pub fn dump(&self, layout: &MomentLayout) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "moment constraint system: dim {} ({} states x {} words), {} data + {} structural, {} null dirs",
            self.dim,
            self.n_states,
            layout.m(),
            self.data.len(),
            self.structural.len(),
            self.null_directions.len()
        );
        for (kind, set) in [("data", &self.data), ("structural", &self.structural)] {
            for c in set.iter() {
                let _ = writeln!(
                    out,
                    "[{kind}] {} = {:+.12e}  ({} entries)",
                    c.label,
                    c.value,
                    c.selector.n_entries()
                );
            }
        }
        out
    }
}

/// Label helper `(z, word)` → `"z3:B00"` (1-based state for readability).
fn pos_label(layout: &MomentLayout, row: usize) -> String {
    let (z, i) = layout.position(row);
    format!("z{}:{}", z + 1, layout.ops[i])
}

/// Build the full constraint system with default options.
pub fn build_constraints(
    layout: &MomentLayout,
    table: &StatisticsTable,
    overlaps: &DMatrix<Complex64>,
    summary: &KeyBasisSummary,
) -> Result<ConstraintSystem, MomentError> {
    build_constraints_with(layout, table, overlaps, summary, ConstraintOptions::default())
}

/// Build the full constraint system.
///
/// Emits, in order: (a) overlap pins `⟨φ_z|𝕀|φ_z'⟩ = λ_zz'`; (b) data pins
/// of single-projector diagonal-block entries to the table probabilities
/// (with `B_y^1` handled affinely in the reduced set); (c) zero-word pins
/// and canonical-word equalities across all positions, including across
/// Hermitian transposes; (d) the phase-error objective
/// `e_ph = 1/2 − Im{2⟨φ₁|B₁⁰|φ₂⟩ + ⟨φ₁|B^∅|φ₂⟩ − λ₁₂}/(2·p_det)`.
pub fn build_constraints_with(
    layout: &MomentLayout,
    table: &StatisticsTable,
    overlaps: &DMatrix<Complex64>,
    summary: &KeyBasisSummary,
    options: ConstraintOptions,
) -> Result<ConstraintSystem, MomentError> {
    let n = layout.n_states();
    let dim = layout.dim();
    if table.n_states() != n {
        return Err(MomentError::DimensionMismatch {
            layout: n,
            what: "statistics table",
            got: table.n_states(),
        });
    }
    if overlaps.nrows() != n || overlaps.ncols() != n {
        return Err(MomentError::DimensionMismatch {
            layout: n,
            what: "overlap matrix",
            got: overlaps.nrows(),
        });
    }
    let norm_err = table.max_normalization_error();
    if norm_err > 1e-12 {
        return Err(MomentError::InconsistentTable(norm_err));
    }
    let noclick_dev = (0..n)
        .map(|z| (table.no_click(Basis::Key, z) - table.no_click(Basis::Test, z)).abs())
        .fold(0.0f64, f64::max);
    if noclick_dev > 1e-9 {
        return Err(MomentError::BasisDependentNoClick(noclick_dev));
    }
    if summary.p_det <= 0.0 {
        return Err(MomentError::ZeroDetectionProbability);
    }

    let mut data = Vec::new();
    let mut structural = Vec::new();

    // (a) overlap pins
    for z in 0..n {
        for zp in z..n {
            let p = layout.index(z, 0);
            let q = layout.index(zp, 0);
            let lam = overlaps[(z, zp)];
            let mut re = HermitianMatrix::new(dim);
            re.add_re_entry(p, q, 1.0);
            structural.push(Constraint {
                selector: re,
                value: if z == zp { 1.0 } else { lam.re },
                label: format!("overlap Re ({},{})", z + 1, zp + 1),
            });
            if z != zp {
                let mut im = HermitianMatrix::new(dim);
                im.add_im_entry(p, q, 1.0);
                structural.push(Constraint {
                    selector: im,
                    value: lam.im,
                    label: format!("overlap Im ({},{})", z + 1, zp + 1),
                });
            }
        }
    }

    // (b) data pins on single-projector words; track what was imposed for
    // the null-direction derivation below.
    let mut imposed: BTreeMap<(usize, OperatorSymbol), f64> = BTreeMap::new();
    for z in 0..n {
        for (i, word) in layout.ops.iter().enumerate() {
            if word.len() != 1 {
                continue;
            }
            let sym = word.symbols()[0];
            let value = match sym {
                OperatorSymbol::Click { y, b } => {
                    let basis = if y == 0 { Basis::Key } else { Basis::Test };
                    let keep = options.constrain_key_wrong_basis || !(z < 2 && y == 1);
                    if !keep {
                        continue;
                    }
                    let outcome = if b == 0 { Outcome::Bit0 } else { Outcome::Bit1 };
                    table.prob(outcome, basis, z)
                }
                OperatorSymbol::NoClick => {
                    if z >= 2 && !options.constrain_test_noclick {
                        continue;
                    }
                    table.no_click(Basis::Key, z)
                }
            };
            let p = layout.index(z, 0);
            let q = layout.index(z, i);
            let mut sel = HermitianMatrix::new(dim);
            sel.add_re_entry(p, q, 1.0);
            data.push(Constraint {
                selector: sel,
                value,
                label: format!("data z{} {}", z + 1, word),
            });
            imposed.insert((z, sym), value);
        }
    }

    // (c) zero-word pins and canonical-word equality groups over all upper
    // positions. Two positions carry the same quantity iff they share
    // (z, z', canonical word); the Hermitian mirror identifies
    // (z, z', u) with (z', z, u†) up to conjugation.
    #[derive(Clone, Copy)]
    struct Member {
        p: usize,
        q: usize,
        mirrored: bool,
    }
    let mut groups: BTreeMap<(usize, usize, Word), Vec<Member>> = BTreeMap::new();
    for p in 0..dim {
        let (z, i) = layout.position(p);
        for q in p..dim {
            let (zp, j) = layout.position(q);
            let word = adjoint(&layout.ops[i]).concat(&layout.ops[j]);
            if word.is_identity() {
                continue; // overlap-pinned above
            }
            if word.is_zero() {
                let mut re = HermitianMatrix::new(dim);
                re.add_re_entry(p, q, 1.0);
                structural.push(Constraint {
                    selector: re,
                    value: 0.0,
                    label: format!("zero Re {}|{}", pos_label(layout, p), pos_label(layout, q)),
                });
                if p != q {
                    let mut im = HermitianMatrix::new(dim);
                    im.add_im_entry(p, q, 1.0);
                    structural.push(Constraint {
                        selector: im,
                        value: 0.0,
                        label: format!(
                            "zero Im {}|{}",
                            pos_label(layout, p),
                            pos_label(layout, q)
                        ),
                    });
                }
                continue;
            }
            let quantity = (z, zp, word.clone());
            let mirror = (zp, z, adjoint(&word));
            let (key, mirrored) = if mirror < quantity {
                (mirror, true)
            } else {
                (quantity, false)
            };
            groups.entry(key).or_default().push(Member { p, q, mirrored });
        }
    }
    for ((z, zp, word), members) in &groups {
        let self_mirrored = z == zp && *word == adjoint(word);
        let base = members[0];
        for member in &members[1..] {
            let mut re = HermitianMatrix::new(dim);
            re.add_re_entry(member.p, member.q, 1.0);
            re.add_re_entry(base.p, base.q, -1.0);
            structural.push(Constraint {
                selector: re,
                value: 0.0,
                label: format!(
                    "eq Re {}|{} ~ {}|{}",
                    pos_label(layout, member.p),
                    pos_label(layout, member.q),
                    pos_label(layout, base.p),
                    pos_label(layout, base.q)
                ),
            });
            if !self_mirrored {
                // mirrored members carry the conjugate value
                let sign = if member.mirrored == base.mirrored {
                    1.0
                } else {
                    -1.0
                };
                let mut im = HermitianMatrix::new(dim);
                im.add_im_entry(member.p, member.q, 1.0);
                im.add_im_entry(base.p, base.q, -sign);
                structural.push(Constraint {
                    selector: im,
                    value: 0.0,
                    label: format!(
                        "eq Im {}|{} ~ {}|{}",
                        pos_label(layout, member.p),
                        pos_label(layout, member.q),
                        pos_label(layout, base.p),
                        pos_label(layout, base.q)
                    ),
                });
            }
        }
        if self_mirrored {
            // ⟨φ_z|u|φ_z⟩ with u = u† is real
            for member in members {
                if member.p != member.q {
                    let mut im = HermitianMatrix::new(dim);
                    im.add_im_entry(member.p, member.q, 1.0);
                    structural.push(Constraint {
                        selector: im,
                        value: 0.0,
                        label: format!(
                            "real {}|{}",
                            pos_label(layout, member.p),
                            pos_label(layout, member.q)
                        ),
                    });
                }
            }
        }
    }

    // (d) objective
    let objective = build_objective(layout, overlaps, summary)?;

    let null_directions = derive_null_directions(layout, table, overlaps, &imposed);

    Ok(ConstraintSystem {
        dim,
        n_states: n,
        data,
        structural,
        objective,
        null_directions,
    })
}

fn build_objective(
    layout: &MomentLayout,
    overlaps: &DMatrix<Complex64>,
    summary: &KeyBasisSummary,
) -> Result<Objective, MomentError> {
    let dim = layout.dim();
    let scale = 1.0 / (2.0 * summary.p_det);
    let lam12 = overlaps[(0, 1)];
    let p = layout.index(0, 0);
    let mut selector = HermitianMatrix::new(dim);
    let find = |sym: OperatorSymbol| {
        layout
            .word_index(&Word::single(sym))
            .ok_or_else(|| MomentError::MissingObjectiveWord(Word::single(sym).to_string()))
    };
    let b10 = find(OperatorSymbol::Click { y: 1, b: 0 })?;
    if layout.reduced {
        // e_ph = 1/2 − Im{2⟨φ₁|B₁⁰|φ₂⟩ + ⟨φ₁|B^∅|φ₂⟩ − λ₁₂}/(2 p_det)
        let noclick = find(OperatorSymbol::NoClick)?;
        selector.add_im_entry(p, layout.index(1, b10), -2.0 * scale);
        selector.add_im_entry(p, layout.index(1, noclick), -scale);
    } else {
        // e_ph = 1/2 − Im{⟨φ₁|B₁⁰|φ₂⟩ − ⟨φ₁|B₁¹|φ₂⟩}/(2 p_det)
        let b11 = find(OperatorSymbol::Click { y: 1, b: 1 })?;
        selector.add_im_entry(p, layout.index(1, b10), -scale);
        selector.add_im_entry(p, layout.index(1, b11), scale);
    }
    let constant = 0.5 + if layout.reduced { lam12.im * scale } else { 0.0 };
    Ok(Objective { constant, selector })
}

/// Directions annihilated by every feasible Gram matrix.
///
/// Three sources, each implied by imposed constraints plus positive
/// semidefiniteness: (1) a pinned-zero single-projector expectation forces
/// its row to vanish, and vanishing rows propagate to any word whose
/// cross-entry shares the canonical word of that row's diagonal; (2) in the
/// reduced set, a vanishing eliminated outcome `p(1|y,z) = 0` forces the
/// combination `𝕀 − B_y^0 − B^∅` of block-z rows to vanish; (3) duplicate
/// states (`|λ_zz'| = 1`) force corresponding rows of the two blocks to
/// coincide up to the overlap phase.
fn derive_null_directions(
    layout: &MomentLayout,
    table: &StatisticsTable,
    overlaps: &DMatrix<Complex64>,
    imposed: &BTreeMap<(usize, OperatorSymbol), f64>,
) -> Vec<Vec<(usize, Complex64)>> {
    let n = layout.n_states();
    let m = layout.m();
    let one = Complex64::new(1.0, 0.0);
    let mut nulls: Vec<Vec<(usize, Complex64)>> = Vec::new();

    // (1) axis rows from pinned zeros, with closure over canonical words
    let mut null_rows: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (&(z, sym), &value) in imposed {
        if value.abs() <= PROB_ZERO_TOL {
            if let Some(i) = layout.word_index(&Word::single(sym)) {
                null_rows.insert((z, i));
            }
        }
    }
    loop {
        let mut grew = false;
        for z in 0..n {
            for j in 1..m {
                if null_rows.contains(&(z, j)) {
                    continue;
                }
                let diag = adjoint(&layout.ops[j]).concat(&layout.ops[j]);
                let implied = null_rows.iter().any(|&(zn, i)| {
                    zn == z && adjoint(&layout.ops[i]).concat(&layout.ops[j]) == diag
                });
                if implied {
                    null_rows.insert((z, j));
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    for &(z, i) in &null_rows {
        nulls.push(vec![(layout.index(z, i), one)]);
    }

    // (2) eliminated-outcome combinations (reduced set only)
    if layout.reduced {
        for z in 0..n {
            for y in 0..2u8 {
                let basis = if y == 0 { Basis::Key } else { Basis::Test };
                let gated = imposed.contains_key(&(z, OperatorSymbol::Click { y, b: 0 }))
                    && imposed.contains_key(&(z, OperatorSymbol::NoClick))
                    && table.prob(Outcome::Bit1, basis, z).abs() <= PROB_ZERO_TOL;
                if !gated {
                    continue;
                }
                let i_click = layout
                    .word_index(&Word::single(OperatorSymbol::Click { y, b: 0 }))
                    .expect("reduced alphabet");
                let i_no = layout
                    .word_index(&Word::single(OperatorSymbol::NoClick))
                    .expect("reduced alphabet");
                nulls.push(vec![
                    (layout.index(z, 0), one),
                    (layout.index(z, i_click), -one),
                    (layout.index(z, i_no), -one),
                ]);
            }
        }
    }

    // (3) duplicate states
    for z in 0..n {
        for zp in (z + 1)..n {
            let lam = overlaps[(z, zp)];
            if lam.norm() >= 1.0 - 1e-12 {
                for i in 0..m {
                    nulls.push(vec![
                        (layout.index(zp, i), one),
                        (layout.index(z, i), -lam),
                    ]);
                }
            }
        }
    }

    nulls
}
