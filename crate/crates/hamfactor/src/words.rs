//! Exact word algebra for the factorization identity.
//!
//! Elements live in the group generated by `a_1, ..., a_m` and a displacing
//! element `h`, subject only to the relations forced by disjoint supports:
//! conjugates `h^k a_i h^{-k}` and `h^l a_j h^{-l}` commute whenever
//! `k != l`. The normal form keeps all `h` to the right,
//!
//! ```text
//! w = (prod_k  h^k w_k h^{-k}) . h^e,
//! ```
//!
//! stored as a label-indexed map from `k` to the freely reduced word `w_k`
//! over `a_1^{+-1}, ..., a_m^{+-1}`, plus the exponent `e`. Multiplication
//! shifts the right operand's labels by the left operand's exponent and
//! reduces per label, so every computation here is exact integer/symbol
//! manipulation -- no numerics.
//!
//! The payoff is [`verify_identity`]: with `c_i = a_1 ... a_i` and
//!
//! ```text
//! g = prod_i h^{i-m-1} c_i^{-1} h^{-(i-m-1)},
//! b = prod_i h^{i-m-1} a_i h^{-(i-m-1)},
//! ```
//!
//! the product `[g, h] . b` reduces to `f = a_1 ... a_m` for every `m`, with
//! all cancellations happening label by label on labels `-m..0`.

use std::collections::BTreeMap;
use std::fmt;

/// One symbol `a_i` or `a_i^{-1}` inside a label component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol {
    /// Generator index, 1-based.
    pub index: usize,
    pub inverse: bool,
}

impl Symbol {
    pub fn gen(index: usize) -> Self {
        Symbol {
            index,
            inverse: false,
        }
    }

    pub fn inv(index: usize) -> Self {
        Symbol {
            index,
            inverse: true,
        }
    }

    fn inverted(self) -> Self {
        Symbol {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    fn cancels(self, other: Self) -> bool {
        self.index == other.index && self.inverse != other.inverse
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "a{}^-1", self.index)
        } else {
            write!(f, "a{}", self.index)
        }
    }
}

/// Group element in normal form; see the module docs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupWord {
    m: usize,
    h_exponent: i64,
    components: BTreeMap<i64, Vec<Symbol>>,
}

impl GroupWord {
    /// The identity element over generators `a_1..a_m`.
    pub fn identity(m: usize) -> Self {
        assert!(m >= 1, "need at least one generator");
        GroupWord {
            m,
            h_exponent: 0,
            components: BTreeMap::new(),
        }
    }

    /// The generator `a_i` at label 0.
    pub fn generator(m: usize, i: usize) -> Self {
        assert!(i >= 1 && i <= m, "generator index out of range");
        let mut w = GroupWord::identity(m);
        w.components.insert(0, vec![Symbol::gen(i)]);
        w
    }

    /// The displacing element `h`.
    pub fn h(m: usize) -> Self {
        GroupWord {
            m,
            h_exponent: 1,
            components: BTreeMap::new(),
        }
    }

    /// `h^k`.
    pub fn h_power(m: usize, k: i64) -> Self {
        GroupWord {
            m,
            h_exponent: k,
            components: BTreeMap::new(),
        }
    }

    /// Build from an explicit component list (words are reduced on entry).
    pub fn from_components(m: usize, parts: &[(i64, Vec<Symbol>)], h_exponent: i64) -> Self {
        let mut w = GroupWord::identity(m);
        w.h_exponent = h_exponent;
        for (label, word) in parts {
            let reduced = reduce(word.clone());
            if !reduced.is_empty() {
                assert!(
                    w.components.insert(*label, reduced).is_none(),
                    "duplicate label {label}"
                );
            }
        }
        w
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h_exponent(&self) -> i64 {
        self.h_exponent
    }

    pub fn components(&self) -> &BTreeMap<i64, Vec<Symbol>> {
        &self.components
    }

    pub fn is_identity(&self) -> bool {
        self.h_exponent == 0 && self.components.is_empty()
    }

    /// Total number of generator symbols across all labels.
    pub fn symbol_count(&self) -> usize {
        self.components.values().map(Vec::len).sum()
    }

    /// Group law `self . rhs`: the right factor's labels shift by the left
    /// factor's h-exponent, then labels merge and reduce independently.
    pub fn multiply(&self, rhs: &GroupWord) -> GroupWord {
        self.multiply_with_trace(rhs, None)
    }

    fn multiply_with_trace(&self, rhs: &GroupWord, mut trace: Option<&mut ProofTrace>) -> GroupWord {
        assert_eq!(self.m, rhs.m, "generator count mismatch");
        let mut components = self.components.clone();
        for (label, word) in &rhs.components {
            let shifted = label + self.h_exponent;
            let entry = components.entry(shifted).or_default();
            let before_lhs = entry.clone();
            entry.extend(word.iter().copied());
            let merged = std::mem::take(entry);
            let reduced = reduce(merged);
            if let Some(t) = trace.as_deref_mut() {
                t.steps.push(TraceStep::ReduceLabel {
                    label: shifted,
                    lhs: before_lhs,
                    rhs: word.clone(),
                    reduced: reduced.clone(),
                });
            }
            if reduced.is_empty() {
                components.remove(&shifted);
            } else {
                components.insert(shifted, reduced);
            }
        }
        GroupWord {
            m: self.m,
            h_exponent: self.h_exponent + rhs.h_exponent,
            components,
        }
    }

    /// Group inverse: labels shift by `-e`, component words reverse and
    /// invert, the exponent negates.
    pub fn invert(&self) -> GroupWord {
        let mut components = BTreeMap::new();
        for (label, word) in &self.components {
            let inv: Vec<Symbol> = word.iter().rev().map(|s| s.inverted()).collect();
            components.insert(label - self.h_exponent, inv);
        }
        GroupWord {
            m: self.m,
            h_exponent: -self.h_exponent,
            components,
        }
    }

    /// `h^k . self . h^{-k}`: labels shift by `k`.
    pub fn conjugate_by_h_power(&self, k: i64) -> GroupWord {
        GroupWord {
            m: self.m,
            h_exponent: self.h_exponent,
            components: self
                .components
                .iter()
                .map(|(label, word)| (label + k, word.clone()))
                .collect(),
        }
    }

    /// Commutator `[u, v] = u v u^{-1} v^{-1}`.
    pub fn commutator(&self, v: &GroupWord) -> GroupWord {
        self.multiply(v)
            .multiply(&self.invert())
            .multiply(&v.invert())
    }

    /// Labels carrying a nonempty component.
    pub fn labels(&self) -> Vec<i64> {
        self.components.keys().copied().collect()
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "e");
        }
        let mut first = true;
        for (label, word) in &self.components {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "[{label}:")?;
            for (i, s) in word.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "]")?;
        }
        if self.h_exponent != 0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "h^{}", self.h_exponent)?;
        }
        Ok(())
    }
}

/// Free reduction: cancel adjacent `x x^{-1}` pairs until none remain.
fn reduce(word: Vec<Symbol>) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::with_capacity(word.len());
    for s in word {
        if out.last().is_some_and(|t| t.cancels(s)) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

/// Partial product `c_i = a_1 a_2 ... a_i` at label 0.
pub fn partial_product(m: usize, i: usize) -> GroupWord {
    assert!(i >= 1 && i <= m);
    let word: Vec<Symbol> = (1..=i).map(Symbol::gen).collect();
    GroupWord::from_components(m, &[(0, word)], 0)
}

/// The auxiliary element
/// `g = prod_{i=1}^{m} h^{i-m-1} c_i^{-1} h^{-(i-m-1)}`
/// with `c_i = a_1...a_i`; the factors sit at the pairwise distinct labels
/// `-m..-1`, so the product order is immaterial.
pub fn build_g(m: usize) -> GroupWord {
    assert!(m >= 1, "need at least one factor");
    let parts: Vec<(i64, Vec<Symbol>)> = (1..=m)
        .map(|i| {
            let label = i as i64 - m as i64 - 1;
            let inv: Vec<Symbol> = (1..=i).rev().map(Symbol::inv).collect();
            (label, inv)
        })
        .collect();
    GroupWord::from_components(m, &parts, 0)
}

/// The glued word `b = prod_{i=1}^{m} h^{i-m-1} a_i h^{-(i-m-1)}`.
pub fn build_b(m: usize) -> GroupWord {
    assert!(m >= 1, "need at least one factor");
    let parts: Vec<(i64, Vec<Symbol>)> = (1..=m)
        .map(|i| (i as i64 - m as i64 - 1, vec![Symbol::gen(i)]))
        .collect();
    GroupWord::from_components(m, &parts, 0)
}

/// One recorded step of a reduction.
#[derive(Debug, Clone)]
pub enum TraceStep {
    /// A whole-word multiplication in the chain.
    Multiply {
        desc: &'static str,
        lhs: GroupWord,
        rhs: GroupWord,
        result: GroupWord,
    },
    /// Concatenation and free reduction at a single label during a multiply.
    ReduceLabel {
        label: i64,
        lhs: Vec<Symbol>,
        rhs: Vec<Symbol>,
        reduced: Vec<Symbol>,
    },
}

/// Replayable record of the reduction that verified an identity.
#[derive(Debug, Clone, Default)]
pub struct ProofTrace {
    pub steps: Vec<TraceStep>,
}

impl ProofTrace {
    /// Total symbols mentioned across all steps; the identity trace is
    /// O(m^2).
    pub fn symbol_count(&self) -> usize {
        self.steps
            .iter()
            .map(|s| match s {
                TraceStep::Multiply { lhs, rhs, result, .. } => {
                    lhs.symbol_count() + rhs.symbol_count() + result.symbol_count()
                }
                TraceStep::ReduceLabel { lhs, rhs, reduced, .. } => {
                    lhs.len() + rhs.len() + reduced.len()
                }
            })
            .sum()
    }

    /// Every label touched by any step.
    pub fn touched_labels(&self) -> Vec<i64> {
        let mut labels: Vec<i64> = Vec::new();
        for step in &self.steps {
            match step {
                TraceStep::Multiply { lhs, rhs, result, .. } => {
                    labels.extend(lhs.labels());
                    labels.extend(rhs.labels());
                    labels.extend(result.labels());
                }
                TraceStep::ReduceLabel { label, .. } => labels.push(*label),
            }
        }
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    /// Re-execute every step and check it reproduces the recorded results;
    /// returns the final word of the last multiply.
    pub fn replay(&self) -> Option<GroupWord> {
        let mut last = None;
        for step in &self.steps {
            match step {
                TraceStep::Multiply { lhs, rhs, result, .. } => {
                    let recomputed = lhs.multiply(rhs);
                    if recomputed != *result {
                        return None;
                    }
                    last = Some(recomputed);
                }
                TraceStep::ReduceLabel { lhs, rhs, reduced, .. } => {
                    let mut merged = lhs.clone();
                    merged.extend(rhs.iter().copied());
                    if reduce(merged) != *reduced {
                        return None;
                    }
                }
            }
        }
        last
    }

    /// Line-oriented rendering, one rewrite per line.
    pub fn to_lines(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|step| match step {
                TraceStep::Multiply { desc, lhs, rhs, result } => {
                    format!("multiply {desc}: ({lhs}) * ({rhs}) => {result}")
                }
                TraceStep::ReduceLabel { label, lhs, rhs, reduced } => {
                    let fmt_word = |w: &[Symbol]| -> String {
                        if w.is_empty() {
                            "e".to_string()
                        } else {
                            w.iter()
                                .map(|s| s.to_string())
                                .collect::<Vec<_>>()
                                .join(" ")
                        }
                    };
                    format!(
                        "reduce label {label}: {} . {} => {}",
                        fmt_word(lhs),
                        fmt_word(rhs),
                        fmt_word(reduced)
                    )
                }
            })
            .collect()
    }
}

/// Verify `[g, h] . b = a_1 a_2 ... a_m` by exact reduction, recording the
/// full reduction trace.
pub fn verify_identity(m: usize) -> (bool, ProofTrace) {
    assert!(m >= 1, "need at least one factor");
    let mut trace = ProofTrace::default();
    let g = build_g(m);
    let h = GroupWord::h(m);
    let b = build_b(m);

    let chain = |desc: &'static str, lhs: &GroupWord, rhs: &GroupWord, t: &mut ProofTrace| {
        let result = lhs.multiply_with_trace(rhs, Some(t));
        t.steps.push(TraceStep::Multiply {
            desc,
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            result: result.clone(),
        });
        result
    };

    let gh = chain("g * h", &g, &h, &mut trace);
    let ghg = chain("(g h) * g^-1", &gh, &g.invert(), &mut trace);
    let commutator = chain("(g h g^-1) * h^-1", &ghg, &GroupWord::h(m).invert(), &mut trace);
    let product = chain("[g,h] * b", &commutator, &b, &mut trace);

    let expected = partial_product(m, m);
    (product == expected, trace)
}

/// Verify the two-factor split of the commutator:
/// `[g, h] = (g h g^{-1}) . h^{-1}` in normal form.
pub fn verify_commutator_split(m: usize) -> bool {
    let g = build_g(m);
    let h = GroupWord::h(m);
    let lhs = g.commutator(&h);
    let conj = g.multiply(&h).multiply(&g.invert());
    let rhs = conj.multiply(&h.invert());
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_laws() {
        let e = GroupWord::identity(3);
        let w = GroupWord::generator(3, 2);
        assert_eq!(w.multiply(&e), w);
        assert_eq!(e.multiply(&w), w);
        assert!(e.is_identity());
        assert_eq!(e.invert(), e);
    }

    #[test]
    fn distinct_labels_commute() {
        let m = 2;
        let a1 = GroupWord::generator(m, 1); // label 0
        let a2 = GroupWord::generator(m, 2).conjugate_by_h_power(1); // label 1
        assert_eq!(a1.multiply(&a2), a2.multiply(&a1));
    }

    #[test]
    fn h_shifts_labels() {
        // h . a1 = (h a1 h^-1) . h = a1-at-label-1 . h
        let m = 2;
        let h = GroupWord::h(m);
        let a1 = GroupWord::generator(m, 1);
        let lhs = h.multiply(&a1);
        let rhs = a1.conjugate_by_h_power(1).multiply(&h);
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.h_exponent(), 1);
        assert_eq!(lhs.labels(), vec![1]);
    }

    #[test]
    fn conjugation_by_h_power() {
        let m = 3;
        let a1 = GroupWord::generator(m, 1);
        let shifted = a1.conjugate_by_h_power(2);
        assert_eq!(shifted.labels(), vec![2]);
        // And via explicit multiplication.
        let explicit = GroupWord::h_power(m, 2)
            .multiply(&a1)
            .multiply(&GroupWord::h_power(m, -2));
        assert_eq!(shifted, explicit);
    }

    #[test]
    fn free_reduction_cancels() {
        let m = 1;
        let w = GroupWord::from_components(
            m,
            &[(0, vec![Symbol::gen(1), Symbol::inv(1), Symbol::gen(1)])],
            0,
        );
        assert_eq!(w, GroupWord::generator(m, 1));
    }

    #[test]
    fn inverse_is_anti_homomorphism() {
        // (u v)^-1 = v^-1 u^-1 on a spread of small words.
        let m = 2;
        let atoms = [
            GroupWord::generator(m, 1),
            GroupWord::generator(m, 2).invert(),
            GroupWord::h(m),
            GroupWord::h(m).invert(),
            GroupWord::generator(m, 2).conjugate_by_h_power(-1),
        ];
        for u in &atoms {
            for v in &atoms {
                for w in &atoms {
                    let uv = u.multiply(v).multiply(w);
                    let inv = w.invert().multiply(&v.invert()).multiply(&u.invert());
                    assert_eq!(uv.invert(), inv);
                    assert!(uv.multiply(&uv.invert()).is_identity());
                }
            }
        }
    }

    #[test]
    fn g_for_one_factor() {
        // m=1: g = a1^-1 at label -1, b = a1 at label -1.
        let g = build_g(1);
        assert_eq!(g.h_exponent(), 0);
        assert_eq!(g.labels(), vec![-1]);
        assert_eq!(g.components()[&-1], vec![Symbol::inv(1)]);
        let b = build_b(1);
        assert_eq!(b.components()[&-1], vec![Symbol::gen(1)]);
    }

    #[test]
    fn g_for_two_factors() {
        // m=2: c1^-1 at label -2 and (a1 a2)^-1 = a2^-1 a1^-1 at label -1.
        let g = build_g(2);
        assert_eq!(g.labels(), vec![-2, -1]);
        assert_eq!(g.components()[&-2], vec![Symbol::inv(1)]);
        assert_eq!(g.components()[&-1], vec![Symbol::inv(2), Symbol::inv(1)]);
    }

    #[test]
    fn b_carries_no_net_h() {
        for m in 1..=64 {
            assert_eq!(build_b(m).h_exponent(), 0);
        }
    }

    #[test]
    fn identity_holds_for_small_m() {
        for m in 1..=8 {
            let (ok, trace) = verify_identity(m);
            assert!(ok, "identity failed at m = {m}");
            assert!(trace.replay().is_some(), "trace replay failed at m = {m}");
        }
    }

    #[test]
    fn identity_trace_label_footprint() {
        // Every intermediate step stays within labels -m..0.
        for m in [1, 2, 5, 9] {
            let (ok, trace) = verify_identity(m);
            assert!(ok);
            let labels = trace.touched_labels();
            assert!(labels.iter().all(|&l| -(m as i64) <= l && l <= 0));
        }
    }

    #[test]
    fn trace_length_is_quadratic() {
        let (ok, trace) = verify_identity(64);
        assert!(ok);
        let symbols = trace.symbol_count();
        // Sum of |c_i| is m(m+1)/2; allow a small constant factor for the
        // recorded multiply operands.
        assert!(symbols <= 40 * 64 * 64, "trace has {symbols} symbols");
    }

    #[test]
    fn commutator_split_holds() {
        assert!(verify_commutator_split(1));
        assert!(verify_commutator_split(5));
    }

    #[test]
    fn commutator_split_negative_control() {
        // Replacing h^-1 by h breaks the split.
        let m = 3;
        let g = build_g(m);
        let h = GroupWord::h(m);
        let conj = g.multiply(&h).multiply(&g.invert());
        let wrong = conj.multiply(&h);
        assert_ne!(g.commutator(&h), wrong);
    }

    #[test]
    fn per_label_cancellations_for_two_factors() {
        // Hand expansion at m=2: label -2 holds c1^-1 a1 = e, label -1 holds
        // c2^-1 c1 a2 = e, label 0 holds c2 = f.
        let (ok, _) = verify_identity(2);
        assert!(ok);
        let g = build_g(2);
        let h = GroupWord::h(2);
        let commutator = g.commutator(&h);
        assert_eq!(commutator.components()[&-2], vec![Symbol::inv(1)]);
        assert_eq!(
            commutator.components()[&0],
            vec![Symbol::gen(1), Symbol::gen(2)]
        );
        let product = commutator.multiply(&build_b(2));
        assert_eq!(product, partial_product(2, 2));
    }

    #[test]
    fn display_formats() {
        let m = 2;
        let w = GroupWord::generator(m, 1)
            .multiply(&GroupWord::generator(m, 2).conjugate_by_h_power(-1))
            .multiply(&GroupWord::h(m));
        let s = w.to_string();
        assert!(s.contains("[-1:a2]"));
        assert!(s.contains("[0:a1]"));
        assert!(s.contains("h^1"));
        assert_eq!(GroupWord::identity(m).to_string(), "e");
    }
}
