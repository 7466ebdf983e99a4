//! Finite maximal antichains of admissible words.
//!
//! The main construction is `Λ_{j,r}`: the words `σ` whose parent still has
//! `p_{σ⁻} c_{σ⁻}^r ≥ η^j` while `p_σ c_σ^r < η^j`. It is carved out by a
//! depth-first walk from every single letter, visiting children in ascending
//! vertex order, so the output is lexicographically sorted.

use std::collections::HashSet;
use std::io::{self, Write};

use crate::system::MarkovSystem;
use crate::weight::Weight;
use crate::word::{Word, WordWeights};

pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AntichainError {
    #[error("level j must be at least 1")]
    InvalidLevel,
    #[error("cardinality cap must be positive")]
    InvalidCap,
    #[error("cardinality cap {cap} exceeded at level {level}; construction stopped after {partial} words (not maximal)")]
    CapExceeded { cap: usize, level: u32, partial: usize },
    #[error("word {0} is a prefix of another word in the set")]
    NotPrefixFree(String),
    #[error("antichain is not maximal (capped or incomplete)")]
    IncompleteAntichain,
}

/// Restricts a construction to a vertex subset and/or a set of starting letters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scope {
    allowed: Option<Vec<bool>>,
    roots: Option<Vec<usize>>,
}

impl Scope {
    pub fn all() -> Scope {
        Scope::default()
    }

    /// Words whose letters all lie in `vertices`.
    pub fn within(n: usize, vertices: &[usize]) -> Scope {
        let mut allowed = vec![false; n];
        for &v in vertices {
            allowed[v] = true;
        }
        Scope {
            allowed: Some(allowed),
            roots: None,
        }
    }

    /// Only words starting with `root`.
    pub fn rooted_at(mut self, root: usize) -> Scope {
        self.roots = Some(vec![root]);
        self
    }

    pub fn allows(&self, v: usize) -> bool {
        self.allowed.as_ref().is_none_or(|a| a[v])
    }

    fn roots(&self, n: usize) -> Vec<usize> {
        match &self.roots {
            Some(r) => r.iter().copied().filter(|&v| self.allows(v)).collect(),
            None => (0..n).filter(|&v| self.allows(v)).collect(),
        }
    }

    fn children<'a>(&'a self, sys: &'a MarkovSystem, v: usize) -> impl Iterator<Item = usize> + 'a {
        sys.successors(v).iter().copied().filter(move |&u| self.allows(u))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntichainEntry {
    pub word: Word,
    pub weights: WordWeights,
}

#[derive(Debug, Clone)]
pub struct Antichain {
    entries: Vec<AntichainEntry>,
    level_j: Option<u32>,
    eta: Weight,
    complete: bool,
}

impl Antichain {
    /// `Λ_{j,r}` over the whole graph.
    pub fn lambda(sys: &MarkovSystem, j: u32, cap: usize) -> Result<Antichain, AntichainError> {
        Antichain::lambda_in(sys, j, cap, &Scope::all())
    }

    /// `Λ_{j,r}` restricted to a scope, e.g. `Λ_{j,r}(i)` or the `H*(i)` antichains.
    pub fn lambda_in(
        sys: &MarkovSystem,
        j: u32,
        cap: usize,
        scope: &Scope,
    ) -> Result<Antichain, AntichainError> {
        if j == 0 {
            return Err(AntichainError::InvalidLevel);
        }
        if cap == 0 {
            return Err(AntichainError::InvalidCap);
        }
        let threshold = sys.eta().powi(j);
        let mut carver = Carver {
            sys,
            scope,
            threshold,
            cap,
            level: j,
            letters: Vec::new(),
            out: Vec::new(),
        };
        for root in scope.roots(sys.n()) {
            carver.letters.push(root);
            carver.descend(WordWeights::unit(Some(root)))?;
            carver.letters.pop();
        }
        Ok(Antichain {
            entries: carver.out,
            level_j: Some(j),
            eta: sys.eta(),
            complete: true,
        })
    }

    /// `Ω_k`: all admissible words of length `k ≥ 1`.
    pub fn cylinders(sys: &MarkovSystem, k: usize, cap: usize) -> Result<Antichain, AntichainError> {
        Antichain::cylinders_in(sys, k, cap, &Scope::all())
    }

    pub fn cylinders_in(
        sys: &MarkovSystem,
        k: usize,
        cap: usize,
        scope: &Scope,
    ) -> Result<Antichain, AntichainError> {
        if k == 0 {
            return Err(AntichainError::InvalidLevel);
        }
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<usize>, WordWeights)> = scope
            .roots(sys.n())
            .into_iter()
            .rev()
            .map(|v| (vec![v], WordWeights::unit(Some(v))))
            .collect();
        while let Some((letters, w)) = stack.pop() {
            if letters.len() == k {
                if out.len() == cap {
                    return Err(AntichainError::CapExceeded {
                        cap,
                        level: k as u32,
                        partial: out.len(),
                    });
                }
                out.push(AntichainEntry {
                    word: Word::from_letters_unchecked(letters),
                    weights: w,
                });
                continue;
            }
            let last = *letters.last().unwrap();
            let kids: Vec<usize> = scope.children(sys, last).collect();
            for &next in kids.iter().rev() {
                let mut l = letters.clone();
                l.push(next);
                stack.push((l, w.extend(sys, last, next)));
            }
        }
        let complete = is_maximal(sys, &out, scope);
        Ok(Antichain {
            entries: out,
            level_j: None,
            eta: sys.eta(),
            complete,
        })
    }

    /// Wraps an arbitrary set of words. The set must be prefix-free; the
    /// result is flagged incomplete unless it is maximal within `scope`.
    pub fn from_words(
        sys: &MarkovSystem,
        words: Vec<Word>,
        scope: &Scope,
    ) -> Result<Antichain, AntichainError> {
        let mut words = words;
        words.sort();
        words.dedup();
        for pair in words.windows(2) {
            if pair[0].is_prefix_of(&pair[1]) {
                return Err(AntichainError::NotPrefixFree(pair[0].to_dashed()));
            }
        }
        let entries: Vec<AntichainEntry> = words
            .into_iter()
            .map(|word| AntichainEntry {
                weights: word.weights(sys),
                word,
            })
            .collect();
        let complete = !entries.is_empty() && is_maximal(sys, &entries, scope);
        Ok(Antichain {
            entries,
            level_j: None,
            eta: sys.eta(),
            complete,
        })
    }

    pub fn entries(&self) -> &[AntichainEntry] {
        &self.entries
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entries.iter().map(|e| &e.word)
    }

    /// `φ_{j,r}`, the cardinality.
    pub fn phi(&self) -> usize {
        self.entries.len()
    }

    pub fn level_j(&self) -> Option<u32> {
        self.level_j
    }

    pub fn eta(&self) -> Weight {
        self.eta
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// `l_{1j}`: shortest word length.
    pub fn min_len(&self) -> usize {
        self.entries.iter().map(|e| e.word.len()).min().unwrap_or(0)
    }

    /// `l_{2j}`: longest word length.
    pub fn max_len(&self) -> usize {
        self.entries.iter().map(|e| e.word.len()).max().unwrap_or(0)
    }

    pub fn is_prefix_free(&self) -> bool {
        let mut words: Vec<&Word> = self.words().collect();
        words.sort();
        words.windows(2).all(|p| !p[0].is_prefix_of(p[1]))
    }

    pub fn is_maximal(&self, sys: &MarkovSystem, scope: &Scope) -> bool {
        is_maximal(sys, &self.entries, scope)
    }

    /// Writes `word;length;p_sigma;c_sigma;measure` rows with a header.
    pub fn write_csv<W: Write>(&self, sys: &MarkovSystem, mut out: W) -> io::Result<()> {
        writeln!(out, "word;length;p_sigma;c_sigma;measure")?;
        for e in &self.entries {
            writeln!(
                out,
                "{};{};{};{};{}",
                e.word.to_dashed(),
                e.word.len(),
                e.weights.mass.value(),
                e.weights.ratio.value(),
                e.weights.measure(sys)
            )?;
        }
        Ok(())
    }
}

struct Carver<'a> {
    sys: &'a MarkovSystem,
    scope: &'a Scope,
    threshold: Weight,
    cap: usize,
    level: u32,
    letters: Vec<usize>,
    out: Vec<AntichainEntry>,
}

impl Carver<'_> {
    fn descend(&mut self, w: WordWeights) -> Result<(), AntichainError> {
        // Ties stay above the threshold: the strict inequality is on the word itself.
        if w.level < self.threshold {
            if self.out.len() == self.cap {
                return Err(AntichainError::CapExceeded {
                    cap: self.cap,
                    level: self.level,
                    partial: self.out.len(),
                });
            }
            self.out.push(AntichainEntry {
                word: Word::from_letters_unchecked(self.letters.clone()),
                weights: w,
            });
            return Ok(());
        }
        let last = *self.letters.last().expect("non-empty while descending");
        let kids: Vec<usize> = self.scope.children(self.sys, last).collect();
        for next in kids {
            self.letters.push(next);
            self.descend(w.extend(self.sys, last, next))?;
            self.letters.pop();
        }
        Ok(())
    }
}

/// Every infinite path inside `scope` has exactly one prefix in `entries`.
fn is_maximal(sys: &MarkovSystem, entries: &[AntichainEntry], scope: &Scope) -> bool {
    if entries.is_empty() {
        return false;
    }
    let set: HashSet<&[usize]> = entries.iter().map(|e| e.word.letters()).collect();
    let depth = entries.iter().map(|e| e.word.len()).max().unwrap_or(0);
    let mut stack: Vec<Vec<usize>> = scope.roots(sys.n()).into_iter().map(|v| vec![v]).collect();
    while let Some(letters) = stack.pop() {
        if set.contains(letters.as_slice()) {
            continue;
        }
        if letters.len() >= depth {
            return false;
        }
        let last = *letters.last().unwrap();
        for next in scope.children(sys, last) {
            let mut l = letters.clone();
            l.push(next);
            stack.push(l);
        }
    }
    true
}

/// Growth of `φ_{j,r}` from one level to the next against the bound `N^{N1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineBound {
    pub j: u32,
    pub phi_j: usize,
    pub phi_next: usize,
    pub ratio: f64,
    /// `N1 = min{h : (p̄ c̄^r)^h < η}`
    pub n1: u32,
    pub bound: f64,
}

pub fn refine_exponent(sys: &MarkovSystem) -> u32 {
    let r = sys.order_r();
    let top = Weight::new(sys.p_max()).unwrap() * Weight::new(sys.c_max().powf(r)).unwrap();
    let eta = sys.eta();
    let mut acc = top;
    let mut h = 1;
    while acc >= eta {
        acc *= top;
        h += 1;
    }
    h
}

pub fn antichain_refine_bound(sys: &MarkovSystem, j: u32, cap: usize) -> Result<RefineBound, AntichainError> {
    let phi_j = Antichain::lambda(sys, j, cap)?.phi();
    let phi_next = Antichain::lambda(sys, j + 1, cap)?.phi();
    assert!(
        phi_j <= phi_next,
        "phi must be non-decreasing in j: phi_{j} = {phi_j} > phi_{} = {phi_next}",
        j + 1
    );
    let n1 = refine_exponent(sys);
    Ok(RefineBound {
        j,
        phi_j,
        phi_next,
        ratio: phi_next as f64 / phi_j as f64,
        n1,
        bound: (sys.n() as f64).powi(n1 as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    /// Independent scan: every admissible word up to `depth`, tested against the
    /// defining window with plain float products.
    fn brute_force_lambda(sys: &MarkovSystem, j: u32, depth: usize) -> Vec<Vec<usize>> {
        let r = sys.order_r();
        let eta = sys.p_min() * sys.c_min().powf(r);
        // sequential products, so exact ties round the same way as the words
        let thr = (0..j).fold(1.0, |acc, _| acc * eta);
        let mut words: Vec<Vec<usize>> = (0..sys.n()).map(|v| vec![v]).collect();
        let mut all = words.clone();
        for _ in 1..depth {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for u in 0..sys.n() {
                    if sys.p(last, u) > 0.0 {
                        let mut x = w.clone();
                        x.push(u);
                        next.push(x);
                    }
                }
            }
            all.extend(next.iter().cloned());
            words = next;
        }
        let weight = |w: &[usize]| -> f64 {
            w.windows(2)
                .map(|p| sys.p(p[0], p[1]) * sys.c(p[0], p[1]).powf(r))
                .product()
        };
        let mut hits: Vec<Vec<usize>> = all
            .into_iter()
            .filter(|w| {
                let parent = &w[..w.len() - 1];
                (parent.len() <= 1 || weight(parent) >= thr) && weight(w) < thr
            })
            .collect();
        hits.sort();
        hits
    }

    #[test]
    fn homogeneous_level_one_is_omega_three() {
        let sys = fixtures::homogeneous();
        let chain = Antichain::lambda(&sys, 1, DEFAULT_CAP).unwrap();
        assert_eq!(chain.phi(), 8);
        assert_eq!((chain.min_len(), chain.max_len()), (3, 3));
        let omega3 = Antichain::cylinders(&sys, 3, DEFAULT_CAP).unwrap();
        assert_eq!(
            chain.words().collect::<Vec<_>>(),
            omega3.words().collect::<Vec<_>>()
        );
    }

    #[test]
    fn homogeneous_levels_match_brute_force() {
        let sys = fixtures::homogeneous();
        for j in 1..=3 {
            let chain = Antichain::lambda(&sys, j, DEFAULT_CAP).unwrap();
            let got: Vec<Vec<usize>> = chain.words().map(|w| w.letters().to_vec()).collect();
            assert_eq!(got, brute_force_lambda(&sys, j, j as usize + 3), "j = {j}");
        }
    }

    #[test]
    fn level_one_words_have_length_at_least_two() {
        for sys in [
            fixtures::homogeneous(),
            fixtures::example_two(1.0),
            fixtures::example_two(2.5),
        ] {
            let chain = Antichain::lambda(&sys, 1, DEFAULT_CAP).unwrap();
            assert!(chain.min_len() >= 2);
        }
    }

    #[test]
    fn example_two_matches_prefix_tree_scan() {
        let sys = fixtures::example_two(1.0);
        for j in 1..=3 {
            let chain = Antichain::lambda(&sys, j, DEFAULT_CAP).unwrap();
            let got: Vec<Vec<usize>> = chain.words().map(|w| w.letters().to_vec()).collect();
            let expected = brute_force_lambda(&sys, j, chain.max_len() + 1);
            assert_eq!(got, expected, "j = {j}");
            assert!(chain.is_maximal(&sys, &Scope::all()));
            assert!(chain.is_prefix_free());
        }
    }

    #[test]
    fn window_and_measure_invariants() {
        for sys in [
            fixtures::homogeneous(),
            fixtures::example_two(1.0),
            fixtures::example_two(0.5),
        ] {
            let eta = sys.eta();
            for j in 1..=4u32 {
                let chain = Antichain::lambda(&sys, j, DEFAULT_CAP).unwrap();
                let hi = eta.powi(j);
                let lo = eta.powi(j + 1);
                let mut mass = 0.0;
                for e in chain.entries() {
                    assert!(e.weights.level < hi);
                    assert!(e.weights.level >= lo);
                    assert!(e.word.parent().weights(&sys).level >= hi);
                    mass += e.weights.measure(&sys);
                }
                assert!((mass - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cap_is_reported() {
        let sys = fixtures::homogeneous();
        let err = Antichain::lambda(&sys, 3, 10).unwrap_err();
        assert_eq!(
            err,
            AntichainError::CapExceeded {
                cap: 10,
                level: 3,
                partial: 10
            }
        );
        assert_eq!(
            Antichain::lambda(&sys, 0, 10).unwrap_err(),
            AntichainError::InvalidLevel
        );
    }

    #[test]
    fn csv_export() {
        let sys = fixtures::homogeneous();
        let chain = Antichain::lambda(&sys, 1, DEFAULT_CAP).unwrap();
        let mut buf = Vec::new();
        chain.write_csv(&sys, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "word;length;p_sigma;c_sigma;measure");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("1-1-1;3;0.25;"));
        assert!(lines[1].ends_with(";0.125"));
    }

    #[test]
    fn from_words_checks_structure() {
        let sys = fixtures::homogeneous();
        let w = |l: &[usize]| Word::new(&sys, l.to_vec()).unwrap();
        let err = Antichain::from_words(&sys, vec![w(&[0]), w(&[0, 1])], &Scope::all()).unwrap_err();
        assert!(matches!(err, AntichainError::NotPrefixFree(_)));

        let partial = Antichain::from_words(&sys, vec![w(&[0]), w(&[1, 0])], &Scope::all()).unwrap();
        assert!(!partial.is_complete());

        let full = Antichain::from_words(&sys, vec![w(&[0]), w(&[1, 0]), w(&[1, 1])], &Scope::all()).unwrap();
        assert!(full.is_complete());
    }

    #[test]
    fn scoped_construction_stays_inside() {
        let sys = fixtures::example_two(1.0);
        let scope = Scope::within(sys.n(), &[0, 1]).rooted_at(1);
        let chain = Antichain::lambda_in(&sys, 2, DEFAULT_CAP, &scope).unwrap();
        assert!(chain
            .words()
            .all(|w| w.first() == Some(1) && w.letters().iter().all(|&v| v < 2)));
        assert!(chain.is_maximal(&sys, &scope));
        assert!(!chain.is_maximal(&sys, &Scope::all()));
    }

    #[test]
    fn refine_bound_homogeneous() {
        let sys = fixtures::homogeneous();
        // p̄c̄ = 1/6 = η, so N1 = 2
        assert_eq!(refine_exponent(&sys), 2);
        let b = antichain_refine_bound(&sys, 1, DEFAULT_CAP).unwrap();
        assert_eq!((b.phi_j, b.phi_next), (8, 16));
        assert!(b.ratio >= 1.0 && b.ratio <= b.bound);
        assert_eq!(b.bound, 4.0);
    }

    #[test]
    fn refine_bound_example_two() {
        let sys = fixtures::example_two(1.0);
        let n1 = refine_exponent(&sys);
        for j in 1..=3 {
            let b = antichain_refine_bound(&sys, j, DEFAULT_CAP).unwrap();
            assert_eq!(b.n1, n1);
            assert!(b.ratio >= 1.0);
            assert!(b.ratio <= 4f64.powi(n1 as i32));
        }
    }
}
