//! Operator words over Bob's measurement projectors and their canonical
//! forms.
//!
//! The alphabet is the click projectors `B_y^b` plus the shared no-click
//! projector `B^∅` (basis independent, treated as outcome ∅ of both bases).
//! Canonicalization applies, until fixpoint: drop identities, collapse
//! adjacent equal symbols (idempotence), and annihilate adjacent projectors
//! of the same basis with different outcomes — where `B^∅` annihilates
//! against every click projector.

use std::fmt;

/// A single measurement projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperatorSymbol {
    /// `B_y^b` for basis y ∈ {0,1} and conclusive outcome b ∈ {0,1}.
    Click { y: u8, b: u8 },
    /// The shared no-detection projector `B^∅`.
    NoClick,
}

impl OperatorSymbol {
    fn annihilates(self, other: Self) -> bool {
        use OperatorSymbol::*;
        match (self, other) {
            (Click { y, b }, Click { y: y2, b: b2 }) => y == y2 && b != b2,
            // B^∅ is the ∅ outcome of both bases, so any click beside it
            // is an orthogonal outcome of a shared measurement.
            (Click { .. }, NoClick) | (NoClick, Click { .. }) => true,
            (NoClick, NoClick) => false,
        }
    }
}

impl fmt::Display for OperatorSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSymbol::Click { y, b } => write!(f, "B{y}{b}"),
            OperatorSymbol::NoClick => write!(f, "BN"),
        }
    }
}

/// A product of projectors in canonical form. The empty word is the
/// identity; `zero` words (annihilated products) all compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    symbols: Vec<OperatorSymbol>,
    zero: bool,
}

impl Word {
    pub fn identity() -> Self {
        Word {
            symbols: Vec::new(),
            zero: false,
        }
    }

    pub fn zero() -> Self {
        Word {
            symbols: Vec::new(),
            zero: true,
        }
    }

    pub fn single(sym: OperatorSymbol) -> Self {
        Word {
            symbols: vec![sym],
            zero: false,
        }
    }

    /// Canonical form of an arbitrary symbol sequence.
    pub fn from_symbols(symbols: &[OperatorSymbol]) -> Self {
        canonicalize_symbols(symbols)
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn is_identity(&self) -> bool {
        !self.zero && self.symbols.is_empty()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[OperatorSymbol] {
        &self.symbols
    }

    /// Leftmost symbol, i.e. the last projector applied to a ket.
    pub fn leftmost(&self) -> Option<OperatorSymbol> {
        self.symbols.first().copied()
    }

    /// Rightmost symbol, i.e. the first projector applied to a ket.
    pub fn rightmost(&self) -> Option<OperatorSymbol> {
        self.symbols.last().copied()
    }

    /// Canonical product `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        if self.zero || other.zero {
            return Word::zero();
        }
        let mut symbols = Vec::with_capacity(self.symbols.len() + other.symbols.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend_from_slice(&other.symbols);
        canonicalize_symbols(&symbols)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            return write!(f, "0");
        }
        if self.symbols.is_empty() {
            return write!(f, "I");
        }
        let mut first = true;
        for s in &self.symbols {
            if !first {
                write!(f, "·")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

/// Canonical form of a word: unique regardless of rewrite order.
pub fn canonicalize(word: &Word) -> Word {
    if word.zero {
        return Word::zero();
    }
    canonicalize_symbols(&word.symbols)
}

fn canonicalize_symbols(symbols: &[OperatorSymbol]) -> Word {
    let mut stack: Vec<OperatorSymbol> = Vec::with_capacity(symbols.len());
    for &sym in symbols {
        match stack.last() {
            Some(&top) if top == sym => {} // idempotence
            Some(&top) if top.annihilates(sym) => return Word::zero(),
            _ => stack.push(sym),
        }
    }
    Word {
        symbols: stack,
        zero: false,
    }
}

/// Adjoint of a canonical word: projectors are self-adjoint, so this is the
/// reversed sequence (itself canonical).
pub fn adjoint(word: &Word) -> Word {
    if word.zero {
        return Word::zero();
    }
    let mut symbols = word.symbols.clone();
    symbols.reverse();
    Word {
        symbols,
        zero: false,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WordError {
    #[error("hierarchy level must be 1, 2 or 3, got {0}")]
    LevelOutOfRange(usize),
}

/// The alphabet: reduced drops `B_y^1` (recovered affinely via
/// `B_y^1 = 𝕀 − B_y^0 − B^∅`), which shrinks the Gram matrix.
pub fn alphabet(reduced: bool) -> Vec<OperatorSymbol> {
    use OperatorSymbol::*;
    if reduced {
        vec![Click { y: 0, b: 0 }, Click { y: 1, b: 0 }, NoClick]
    } else {
        vec![
            Click { y: 0, b: 0 },
            Click { y: 0, b: 1 },
            Click { y: 1, b: 0 },
            Click { y: 1, b: 1 },
            NoClick,
        ]
    }
}

/// All distinct nonzero canonical words of length ≤ level, identity first,
/// then by generation order (length-major). Level 1 reduced gives
/// `{𝕀, B₀⁰, B₁⁰, B^∅}`.
pub fn generate_operator_set(level: usize, reduced: bool) -> Result<Vec<Word>, WordError> {
    if !(1..=3).contains(&level) {
        return Err(WordError::LevelOutOfRange(level));
    }
    let alpha = alphabet(reduced);
    let mut ops = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for word in &frontier {
            for &sym in &alpha {
                let product = word.concat(&Word::single(sym));
                if product.is_zero() || ops.contains(&product) || next.contains(&product) {
                    continue;
                }
                next.push(product);
            }
        }
        ops.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use OperatorSymbol::*;

    const A: OperatorSymbol = Click { y: 0, b: 0 };
    const C: OperatorSymbol = Click { y: 1, b: 0 };
    const E: OperatorSymbol = NoClick;

    #[test]
    fn idempotence_collapses() {
        assert_eq!(Word::from_symbols(&[A, A]), Word::single(A));
    }

    #[test]
    fn noclick_annihilates_clicks() {
        assert!(Word::from_symbols(&[A, E]).is_zero());
        assert!(Word::from_symbols(&[E, C]).is_zero());
        assert!(!Word::from_symbols(&[E, E]).is_zero());
    }

    #[test]
    fn same_basis_different_outcome_annihilates() {
        assert!(Word::from_symbols(&[A, Click { y: 0, b: 1 }]).is_zero());
        assert!(!Word::from_symbols(&[A, Click { y: 1, b: 1 }]).is_zero());
    }

    #[test]
    fn inner_idempotence_shortens_word() {
        let got = Word::from_symbols(&[A, C, C, A]);
        assert_eq!(got, Word::from_symbols(&[A, C, A]));
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn adjoint_reverses_and_involutes() {
        let w = Word::from_symbols(&[A, C]);
        assert_eq!(adjoint(&w), Word::from_symbols(&[C, A]));
        assert_eq!(adjoint(&adjoint(&w)), w);
        assert_eq!(adjoint(&Word::single(A)), Word::single(A));
        assert_eq!(adjoint(&Word::zero()), Word::zero());
    }

    #[test]
    fn level_one_sets() {
        let reduced = generate_operator_set(1, true).unwrap();
        assert_eq!(
            reduced,
            vec![
                Word::identity(),
                Word::single(A),
                Word::single(C),
                Word::single(E)
            ]
        );
        let full = generate_operator_set(1, false).unwrap();
        assert_eq!(full.len(), 6);
    }

    #[test]
    fn level_two_reduced_has_six_words() {
        let ops = generate_operator_set(2, true).unwrap();
        let expected = vec![
            Word::identity(),
            Word::single(A),
            Word::single(C),
            Word::single(E),
            Word::from_symbols(&[A, C]),
            Word::from_symbols(&[C, A]),
        ];
        assert_eq!(ops, expected);
    }

    #[test]
    fn level_three_reduced_has_eight_words() {
        let ops = generate_operator_set(3, true).unwrap();
        assert_eq!(ops.len(), 8);
        assert!(ops.contains(&Word::from_symbols(&[A, C, A])));
        assert!(ops.contains(&Word::from_symbols(&[C, A, C])));
    }

    #[test]
    fn level_out_of_range_rejected() {
        assert!(generate_operator_set(0, true).is_err());
        assert!(generate_operator_set(4, true).is_err());
    }

    /// Reference rewriter that applies an applicable rule at a position
    /// chosen by the seed, to check confluence of the canonicalizer.
    fn rewrite_randomly(symbols: &[OperatorSymbol], seed: u64) -> Word {
        let mut syms = symbols.to_vec();
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        loop {
            let mut sites = Vec::new();
            for i in 0..syms.len().saturating_sub(1) {
                if syms[i] == syms[i + 1] || syms[i].annihilates(syms[i + 1]) {
                    sites.push(i);
                }
            }
            if sites.is_empty() {
                return Word {
                    symbols: syms,
                    zero: false,
                };
            }
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let i = sites[(state as usize) % sites.len()];
            if syms[i].annihilates(syms[i + 1]) {
                return Word::zero();
            }
            syms.remove(i + 1);
        }
    }

    proptest! {
        #[test]
        fn canonicalization_is_confluent(
            raw in proptest::collection::vec(0usize..5, 0..6),
            seed in any::<u64>(),
        ) {
            let full = alphabet(false);
            let symbols: Vec<_> = raw.iter().map(|&i| full[i]).collect();
            let canonical = Word::from_symbols(&symbols);
            let randomized = rewrite_randomly(&symbols, seed);
            prop_assert_eq!(canonical.clone(), randomized);
            // canonicalize is idempotent and adjoint is an involution
            prop_assert_eq!(canonicalize(&canonical), canonical.clone());
            prop_assert_eq!(adjoint(&adjoint(&canonical)), canonical);
        }
    }
}
