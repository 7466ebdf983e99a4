//! One-dimensional realization of the cylinder construction and sampling of μ.
//!
//! Root `J_i` is `[2i, 2i+1]`. Inside `J_σ` ending at vertex `i`, the children
//! `J_{σ*j}` are laid out left to right by ascending `j`, with lengths
//! `c_ij |J_σ|` and a uniform gap `g_i |J_σ|`, `g_i = (1 - Σ_j c_ij)/(m_i - 1)`.

use std::io::{self, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::antichain::Antichain;
use crate::system::MarkovSystem;
use crate::word::Word;

/// Relative slack on the sampling stop rule `c_σ ≤ resolution`.
const STOP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("separation t = {t} is infeasible for row {row} (maximal feasible t is {max_t})", row = .row + 1)]
    SeparationInfeasible { row: usize, t: f64, max_t: f64 },
    #[error("separation t must lie in (0, 1), got {0}")]
    InvalidSeparation(f64),
    #[error("resolution must lie in (0, 1], got {0}")]
    InvalidResolution(f64),
    #[error("sample count must be at least 1")]
    InvalidCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub left: f64,
    pub len: f64,
}

impl Interval {
    pub fn right(&self) -> f64 {
        self.left + self.len
    }

    pub fn midpoint(&self) -> f64 {
        self.left + 0.5 * self.len
    }

    /// Containment up to rounding of the endpoints.
    pub fn contains(&self, other: &Interval) -> bool {
        let slack = 1e-12 * self.len + 8.0 * f64::EPSILON * self.right().abs().max(1.0);
        other.left >= self.left - slack && other.right() <= self.right() + slack
    }

    /// `inf |x - y|` over the two intervals; zero if they overlap.
    pub fn distance(&self, other: &Interval) -> f64 {
        (other.left - self.right())
            .max(self.left - other.right())
            .max(0.0)
    }
}

/// Largest `t` with `Σ c_ij + (m_i - 1) t max_j c_ij ≤ 1` for every row.
pub fn max_feasible_separation(sys: &MarkovSystem) -> (usize, f64) {
    (0..sys.n())
        .map(|i| {
            let succ = sys.successors(i);
            let total: f64 = succ.iter().map(|&j| sys.c(i, j)).sum();
            let largest = succ.iter().map(|&j| sys.c(i, j)).fold(0.0, f64::max);
            (i, (1.0 - total) / ((succ.len() - 1) as f64 * largest))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("system has at least one vertex")
}

#[derive(Debug, Clone)]
pub struct CylinderGeometry {
    separation_t: f64,
    /// Per row: `(j, offset of J_{σ*j} inside J_σ relative to |J_σ|, c_ij)`.
    placement: Vec<Vec<(usize, f64, f64)>>,
    gaps: Vec<f64>,
}

impl CylinderGeometry {
    /// Builds the placement for separation `t`, taken from the argument, then
    /// from the system, then defaulting to `0.9` times the maximal feasible value.
    pub fn realize(sys: &MarkovSystem, t: Option<f64>) -> Result<CylinderGeometry, GeometryError> {
        let (worst_row, max_t) = max_feasible_separation(sys);
        let t = match t.or(sys.separation_t()) {
            Some(t) => t,
            None if max_t > 0.0 => (0.9 * max_t).min(0.9),
            None => {
                return Err(GeometryError::SeparationInfeasible {
                    row: worst_row,
                    t: 0.0,
                    max_t,
                })
            }
        };
        if !(t > 0.0 && t < 1.0) {
            return Err(GeometryError::InvalidSeparation(t));
        }
        let mut placement = Vec::with_capacity(sys.n());
        let mut gaps = Vec::with_capacity(sys.n());
        for i in 0..sys.n() {
            let succ = sys.successors(i);
            let total: f64 = succ.iter().map(|&j| sys.c(i, j)).sum();
            let largest = succ.iter().map(|&j| sys.c(i, j)).fold(0.0, f64::max);
            let gap = (1.0 - total) / (succ.len() - 1) as f64;
            if gap < t * largest {
                let row_max = gap / largest;
                return Err(GeometryError::SeparationInfeasible {
                    row: i,
                    t,
                    max_t: row_max,
                });
            }
            let mut offset = 0.0;
            let mut row = Vec::with_capacity(succ.len());
            for &j in succ {
                row.push((j, offset, sys.c(i, j)));
                offset += sys.c(i, j) + gap;
            }
            placement.push(row);
            gaps.push(gap);
        }
        Ok(CylinderGeometry {
            separation_t: t,
            placement,
            gaps,
        })
    }

    pub fn separation_t(&self) -> f64 {
        self.separation_t
    }

    /// Relative gap `g_i` between consecutive children of a cylinder ending at `i`.
    pub fn gap(&self, i: usize) -> f64 {
        self.gaps[i]
    }

    pub fn root(&self, i: usize) -> Interval {
        Interval {
            left: 2.0 * i as f64,
            len: 1.0,
        }
    }

    fn step(&self, parent: Interval, from: usize, to: usize) -> Interval {
        let &(_, offset, c) = self.placement[from]
            .iter()
            .find(|e| e.0 == to)
            .expect("admissible edge");
        Interval {
            left: parent.left + offset * parent.len,
            len: c * parent.len,
        }
    }

    /// `J_σ` for a non-empty admissible word.
    pub fn interval(&self, word: &Word) -> Interval {
        let letters = word.letters();
        let mut iv = self.root(letters[0]);
        for w in letters.windows(2) {
            iv = self.step(iv, w[0], w[1]);
        }
        iv
    }

    /// `(J_{σ*j}, j)` for every admissible continuation of `σ`.
    pub fn children(&self, word: &Word) -> Vec<(usize, Interval)> {
        let parent = self.interval(word);
        let last = word.last().expect("non-empty word");
        self.placement[last]
            .iter()
            .map(|&(j, offset, c)| {
                (
                    j,
                    Interval {
                        left: parent.left + offset * parent.len,
                        len: c * parent.len,
                    },
                )
            })
            .collect()
    }

    /// Smallest `d(J_{σ*i}, J_{σ*j}) / max(|J_{σ*i}|, |J_{σ*j}|)` over sibling pairs.
    pub fn separation_ratio(&self, word: &Word) -> f64 {
        let kids = self.children(word);
        let mut worst = f64::INFINITY;
        for (a, (_, x)) in kids.iter().enumerate() {
            for (_, y) in &kids[a + 1..] {
                worst = worst.min(x.distance(y) / x.len.max(y.len));
            }
        }
        worst
    }

    /// Writes `word;left;right` for each word of the antichain.
    pub fn write_antichain_csv<W: Write>(&self, chain: &Antichain, mut out: W) -> io::Result<()> {
        writeln!(out, "word;left;right")?;
        for w in chain.words() {
            let iv = self.interval(w);
            writeln!(out, "{};{};{}", w.to_dashed(), iv.left, iv.right())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub position: f64,
    pub word: Word,
    /// `|J_σ|`, an upper bound on the distance to the limit point.
    pub resolution: f64,
}

/// Draws `count` points of μ: the first letter from `χ`, then successive
/// letters from the rows of `P`, stopping once `c_σ ≤ resolution`; each
/// sample is the midpoint of the final `J_σ`.
pub fn sample_measure(
    geom: &CylinderGeometry,
    sys: &MarkovSystem,
    count: usize,
    resolution: f64,
    seed: u64,
) -> Result<Vec<SamplePoint>, GeometryError> {
    if count == 0 {
        return Err(GeometryError::InvalidCount);
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(GeometryError::InvalidResolution(resolution));
    }
    let start = WeightedIndex::new(sys.initial()).expect("χ is a probability vector");
    let rows: Vec<WeightedIndex<f64>> = (0..sys.n())
        .map(|i| {
            let probs: Vec<f64> = sys.successors(i).iter().map(|&j| sys.p(i, j)).collect();
            WeightedIndex::new(probs).expect("rows are stochastic")
        })
        .collect();
    let stop = resolution * (1.0 + STOP_SLACK);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = start.sample(&mut rng);
        let mut letters = vec![v];
        let mut iv = geom.root(v);
        while iv.len > stop {
            let next = sys.successors(v)[rows[v].sample(&mut rng)];
            iv = geom.step(iv, v, next);
            letters.push(next);
            v = next;
        }
        out.push(SamplePoint {
            position: iv.midpoint(),
            word: Word::from_letters_unchecked(letters),
            resolution: iv.len,
        });
    }
    Ok(out)
}

/// Writes `position;word;weight` rows; every sample carries weight `1/count`.
pub fn write_samples_csv<W: Write>(samples: &[SamplePoint], mut out: W) -> io::Result<()> {
    writeln!(out, "position;word;weight")?;
    let weight = 1.0 / samples.len().max(1) as f64;
    for s in samples {
        writeln!(out, "{};{};{}", s.position, s.word.to_dashed(), weight)?;
    }
    Ok(())
}

/// A random admissible word of the given length, first letter uniform.
pub fn random_word<R: rand::Rng>(sys: &MarkovSystem, len: usize, rng: &mut R) -> Word {
    let mut v = rng.gen_range(0..sys.n());
    let mut letters = vec![v];
    for _ in 1..len {
        let succ = sys.successors(v);
        v = succ[rng.gen_range(0..succ.len())];
        letters.push(v);
    }
    Word::from_letters_unchecked(letters)
}
