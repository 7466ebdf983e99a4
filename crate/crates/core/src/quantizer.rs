//! Empirical order-r quantization of discretized Markov-type measures.
//!
//! Atoms live on the line, so the cells of a codebook are contiguous runs of
//! sorted atoms. Lloyd alternates nearest-code assignment with an exact
//! per-cell centre update.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::antichain::{Antichain, AntichainError};
use crate::geometry::{CylinderGeometry, SamplePoint};
use crate::numeric::{compensated_sum, fit_line};
use crate::system::MarkovSystem;

/// Tolerance on the total atom weight.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizerError {
    #[error("antichain is incomplete (capped or not maximal)")]
    IncompleteAntichain,
    #[error("codebook size {n} is invalid for {atoms} atoms")]
    InvalidN { n: usize, atoms: usize },
    #[error("order r must be positive and finite, got {0}")]
    InvalidOrder(f64),
    #[error("atom weights must be positive and sum to 1 (sum is {0})")]
    InvalidWeights(f64),
    #[error("distortion {distortion:e} at n = {n} is within 2x of the discretization error {bound:e}")]
    ResolutionTooCoarse { n: usize, distortion: f64, bound: f64 },
    #[error("the n schedule is empty")]
    EmptySchedule,
    #[error(transparent)]
    Antichain(#[from] AntichainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Antichain { level_j: Option<u32>, phi: usize },
    Samples { count: usize },
    Manual,
}

/// A finitely supported probability measure on the line, atoms sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    provenance: Provenance,
    resolution: f64,
}

impl DiscreteMeasure {
    pub fn new(
        mut atoms: Vec<Atom>,
        provenance: Provenance,
        resolution: f64,
    ) -> Result<DiscreteMeasure, QuantizerError> {
        let total = compensated_sum(atoms.iter().map(|a| a.weight));
        let finite = atoms
            .iter()
            .all(|a| a.position.is_finite() && a.weight.is_finite());
        if atoms.is_empty()
            || !finite
            || atoms.iter().any(|a| a.weight <= 0.0)
            || (total - 1.0).abs() > WEIGHT_TOL
        {
            return Err(QuantizerError::InvalidWeights(total));
        }
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        Ok(DiscreteMeasure {
            atoms,
            provenance,
            resolution,
        })
    }

    /// Equal-weight atoms at the sample positions.
    pub fn from_samples(samples: &[SamplePoint]) -> Result<DiscreteMeasure, QuantizerError> {
        let w = 1.0 / samples.len().max(1) as f64;
        let atoms = samples
            .iter()
            .map(|s| Atom {
                position: s.position,
                weight: w,
            })
            .collect();
        let resolution = samples.iter().map(|s| s.resolution).fold(0.0, f64::max);
        DiscreteMeasure::new(atoms, Provenance::Samples { count: samples.len() }, resolution)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Largest cylinder diameter represented by an atom.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight))
    }

    /// Every atom moved by `x ↦ scale·x + shift` (`scale > 0`).
    pub fn affine(&self, scale: f64, shift: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: scale * a.position + shift,
                    weight: a.weight,
                })
                .collect(),
            provenance: self.provenance.clone(),
            resolution: scale * self.resolution,
        }
    }

    /// `Σ w_k min_a |x_k - a|^r` for a sorted codebook.
    pub fn distortion(&self, codebook: &[f64], r: f64) -> f64 {
        let cells = assign(&self.atoms, codebook);
        compensated_sum(
            self.atoms
                .iter()
                .zip(&cells)
                .map(|(a, &m)| a.weight * (a.position - codebook[m]).abs().powf(r)),
        )
    }
}

/// One atom per word at the midpoint of `J_σ`, with weight `μ(J_σ) = χ_{σ1} p_σ`.
pub fn discretize(
    sys: &MarkovSystem,
    chain: &Antichain,
    geom: &CylinderGeometry,
) -> Result<DiscreteMeasure, QuantizerError> {
    if !chain.is_complete() {
        return Err(QuantizerError::IncompleteAntichain);
    }
    let mut resolution: f64 = 0.0;
    let atoms = chain
        .entries()
        .iter()
        .map(|e| {
            let iv = geom.interval(&e.word);
            resolution = resolution.max(iv.len);
            Atom {
                position: iv.midpoint(),
                weight: e.weights.measure(sys),
            }
        })
        .collect();
    DiscreteMeasure::new(
        atoms,
        Provenance::Antichain {
            level_j: chain.level_j(),
            phi: chain.phi(),
        },
        resolution,
    )
}

/// `Σ μ(J_σ) (|J_σ|/2)^r`: the r-th power transport cost from μ to its
/// midpoint discretization.
pub fn discretization_error(sys: &MarkovSystem, chain: &Antichain) -> f64 {
    let r = sys.order_r();
    compensated_sum(
        chain
            .entries()
            .iter()
            .map(|e| e.weights.measure(sys) * (0.5 * e.weights.ratio.value()).powf(r)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `D^r`-weighted seeding.
    KMeansPlusPlus,
    /// Code `m` at the weighted quantile `(m + U_m)/n`, `U_m` uniform.
    JitteredQuantiles,
    /// Starting from one cell, repeatedly split the cell of largest
    /// distortion at its best two-means cut. Deterministic.
    GreedySplit,
    /// A fixed starting codebook; deterministic.
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOptions {
    pub init: Init,
    /// Stop once the relative distortion decrease falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        LloydOptions {
            init: Init::KMeansPlusPlus,
            tol: 1e-12,
            max_iter: 1000,
            restarts: 8,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizationResult {
    pub n: usize,
    pub codebook: Vec<f64>,
    /// `Σ w_k d(x_k, codebook)^r`, the estimate of `e_{n,r}^r`.
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Index of the nearest code for every atom; ties go to the lower code.
fn assign(atoms: &[Atom], codes: &[f64]) -> Vec<usize> {
    let mut m = 0;
    atoms
        .iter()
        .map(|a| {
            while m + 1 < codes.len() && (a.position - codes[m + 1]).abs() < (a.position - codes[m]).abs() {
                m += 1;
            }
            m
        })
        .collect()
}

fn cell_cost(atoms: &[Atom], a: f64, r: f64) -> f64 {
    compensated_sum(atoms.iter().map(|x| x.weight * (x.position - a).abs().powf(r)))
}

/// Minimizer of `Σ w |x - a|^r` over `a` for a non-empty sorted cell.
fn cell_centre(atoms: &[Atom], r: f64) -> f64 {
    let first = atoms[0].position;
    let last = atoms[atoms.len() - 1].position;
    if first == last {
        return first;
    }
    if r == 2.0 {
        let total = compensated_sum(atoms.iter().map(|x| x.weight));
        return compensated_sum(atoms.iter().map(|x| x.weight * x.position)) / total;
    }
    if r == 1.0 {
        let total = compensated_sum(atoms.iter().map(|x| x.weight));
        let mut acc = 0.0;
        for x in atoms {
            acc += x.weight;
            if acc >= 0.5 * total {
                return x.position;
            }
        }
        return last;
    }
    if r < 1.0 {
        // concave between atoms, so the minimum sits on an atom
        return atoms
            .iter()
            .map(|x| (cell_cost(atoms, x.position, r), x.position))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
            .1;
    }
    golden_section(|a| cell_cost(atoms, a, r), first, last, 1e-12 * (last - first))
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
        if a >= b {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn kmeans_pp(atoms: &[Atom], n: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pick = |weights: &[f64], rng: &mut ChaCha8Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        for (k, w) in weights.iter().enumerate() {
            acc += w;
            if acc > target {
                return k;
            }
        }
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    };
    let masses: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    let mut codes = vec![atoms[pick(&masses, rng)].position];
    let mut dist: Vec<f64> = atoms
        .iter()
        .map(|a| a.weight * (a.position - codes[0]).abs().powf(r))
        .collect();
    while codes.len() < n {
        let c = if dist.iter().any(|&d| d > 0.0) {
            atoms[pick(&dist, rng)].position
        } else {
            // every atom already has a code; duplicates are repaired later
            codes[0]
        };
        codes.push(c);
        for (d, a) in dist.iter_mut().zip(atoms) {
            *d = d.min(a.weight * (a.position - c).abs().powf(r));
        }
    }
    codes.sort_by(f64::total_cmp);
    codes
}

fn jittered_quantiles(atoms: &[Atom], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let total: f64 = atoms.iter().map(|a| a.weight).sum();
    let mut codes = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut k = 0;
    for m in 0..n {
        let target = total * (m as f64 + rng.gen::<f64>()) / n as f64;
        while k + 1 < atoms.len() && acc + atoms[k].weight < target {
            acc += atoms[k].weight;
            k += 1;
        }
        codes.push(atoms[k].position);
    }
    codes
}

fn greedy_split(atoms: &[Atom], n: usize, r: f64) -> Vec<f64> {
    // prefix sums of w, w x and w x^2 give each cut's two-means cost in O(1)
    let mut w = vec![0.0; atoms.len() + 1];
    let mut wx = w.clone();
    let mut wxx = w.clone();
    for (k, a) in atoms.iter().enumerate() {
        w[k + 1] = w[k] + a.weight;
        wx[k + 1] = wx[k] + a.weight * a.position;
        wxx[k + 1] = wxx[k] + a.weight * a.position * a.position;
    }
    let variance = |a: usize, b: usize| {
        let m = w[b] - w[a];
        let s = wx[b] - wx[a];
        (wxx[b] - wxx[a]) - s * s / m
    };
    let cost = |a: usize, b: usize| {
        let cell = &atoms[a..b];
        cell_cost(cell, cell_centre(cell, r), r)
    };
    let mut cells = vec![(cost(0, atoms.len()), 0, atoms.len())];
    while cells.len() < n {
        let (idx, &(c, a, b)) = cells
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .unwrap();
        if c <= 0.0 || b - a < 2 {
            break;
        }
        let cut = (a + 1..b)
            .min_by(|&x, &y| (variance(a, x) + variance(x, b)).total_cmp(&(variance(a, y) + variance(y, b))))
            .unwrap();
        cells[idx] = (cost(a, cut), a, cut);
        cells.push((cost(cut, b), cut, b));
    }
    let mut codes: Vec<f64> = cells
        .iter()
        .map(|&(_, a, b)| cell_centre(&atoms[a..b], r))
        .collect();
    while codes.len() < n {
        codes.push(codes[0]);
    }
    codes.sort_by(f64::total_cmp);
    codes
}

/// Moves codes with empty cells onto the atoms contributing most to the
/// distortion. Returns whether anything moved.
fn repair_empty_cells(atoms: &[Atom], codes: &mut [f64], cells: &mut Vec<usize>, r: f64) -> bool {
    let mut moved = false;
    loop {
        let mut used = vec![false; codes.len()];
        for &m in cells.iter() {
            used[m] = true;
        }
        let Some(empty) = used.iter().position(|&u| !u) else {
            return moved;
        };
        let worst = atoms
            .iter()
            .zip(cells.iter())
            .enumerate()
            .filter(|(_, (a, &m))| a.position != codes[m])
            .max_by(|(_, (a, &m)), (_, (b, &k))| {
                let da = a.weight * (a.position - codes[m]).abs().powf(r);
                let db = b.weight * (b.position - codes[k]).abs().powf(r);
                da.total_cmp(&db)
            })
            .map(|(idx, _)| idx);
        let Some(idx) = worst else {
            // every atom sits on a code: fewer distinct atoms than codes
            return moved;
        };
        codes[empty] = atoms[idx].position;
        codes.sort_by(f64::total_cmp);
        *cells = assign(atoms, codes);
        moved = true;
    }
}

/// Largest pair of adjacent cells that is re-split exhaustively; larger
/// pairs only try moving one atom across their boundary.
const RESPLIT_LIMIT: usize = 64;

/// Re-splits pairs of adjacent cells while that lowers the summed optimal
/// cell costs. Returns whether any split changed.
fn refine_boundaries(atoms: &[Atom], codes: &mut [f64], cells: &[usize], r: f64) -> bool {
    let n = codes.len();
    let mut bounds = vec![0; n + 1];
    for m in 0..n {
        bounds[m + 1] = bounds[m] + cells[bounds[m]..].iter().take_while(|&&c| c == m).count();
    }
    if bounds[n] != atoms.len() || bounds.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    let mut cost: Vec<f64> = (0..n)
        .map(|m| cell_cost(&atoms[bounds[m]..bounds[m + 1]], codes[m], r))
        .collect();
    let mut improved_any = false;
    loop {
        let mut improved = false;
        for m in 1..n {
            let (a, b, c) = (bounds[m - 1], bounds[m], bounds[m + 1]);
            let candidates: Vec<usize> = if c - a <= RESPLIT_LIMIT {
                (a + 1..c).filter(|&k| k != b).collect()
            } else {
                [b - 1, b + 1].into_iter().filter(|&k| k > a && k < c).collect()
            };
            let mut best = (cost[m - 1] + cost[m]) * (1.0 - 1e-13);
            let mut choice = None;
            for k in candidates {
                let (left, right) = (&atoms[a..k], &atoms[k..c]);
                let (cl, cr) = (cell_centre(left, r), cell_centre(right, r));
                let (kl, kr) = (cell_cost(left, cl, r), cell_cost(right, cr, r));
                if kl + kr < best {
                    best = kl + kr;
                    choice = Some((k, cl, cr, kl, kr));
                }
            }
            if let Some((k, cl, cr, kl, kr)) = choice {
                bounds[m] = k;
                codes[m - 1] = cl;
                codes[m] = cr;
                cost[m - 1] = kl;
                cost[m] = kr;
                improved = true;
            }
        }
        if !improved {
            return improved_any;
        }
        improved_any = true;
    }
}

fn run_once(atoms: &[Atom], n: usize, r: f64, opts: &LloydOptions, seed: u64) -> QuantizationResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codes = match &opts.init {
        Init::KMeansPlusPlus => kmeans_pp(atoms, n, r, &mut rng),
        Init::JitteredQuantiles => jittered_quantiles(atoms, n, &mut rng),
        Init::GreedySplit => greedy_split(atoms, n, r),
        Init::Given(c) => {
            let mut c = c.clone();
            c.sort_by(f64::total_cmp);
            c
        }
    };
    let total_cost = |codes: &[f64], cells: &[usize]| {
        compensated_sum(
            atoms
                .iter()
                .zip(cells)
                .map(|(a, &m)| a.weight * (a.position - codes[m]).abs().powf(r)),
        )
    };
    let mut cells = assign(atoms, &codes);
    repair_empty_cells(atoms, &mut codes, &mut cells, r);
    let mut distortion = total_cost(&codes, &cells);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut start = 0;
        let mut changed = false;
        for (m, code) in codes.iter_mut().enumerate() {
            let end = start + cells[start..].iter().take_while(|&&c| c == m).count();
            if end > start {
                let cell = &atoms[start..end];
                let candidate = cell_centre(cell, r);
                if candidate != *code && cell_cost(cell, candidate, r) < cell_cost(cell, *code, r) {
                    *code = candidate;
                    changed = true;
                }
            }
            start = end;
        }
        if !changed {
            let mut trial = codes.clone();
            if refine_boundaries(atoms, &mut trial, &cells, r) {
                codes = trial;
                changed = true;
            }
        }
        codes.sort_by(f64::total_cmp);
        cells = assign(atoms, &codes);
        repair_empty_cells(atoms, &mut codes, &mut cells, r);
        let next = total_cost(&codes, &cells);
        let decrease = distortion - next;
        distortion = next;
        if !changed || decrease <= opts.tol * distortion {
            converged = true;
            break;
        }
    }
    QuantizationResult {
        n,
        codebook: codes,
        distortion,
        iterations,
        converged,
    }
}

/// Best of `opts.restarts` Lloyd runs, each seeded from `opts.seed`.
pub fn lloyd(
    measure: &DiscreteMeasure,
    n: usize,
    r: f64,
    opts: &LloydOptions,
) -> Result<QuantizationResult, QuantizerError> {
    if n == 0 || n > measure.len() {
        return Err(QuantizerError::InvalidN {
            n,
            atoms: measure.len(),
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(QuantizerError::InvalidOrder(r));
    }
    if let Init::Given(c) = &opts.init {
        if c.len() != n {
            return Err(QuantizerError::InvalidN {
                n: c.len(),
                atoms: measure.len(),
            });
        }
    }
    let restarts = match opts.init {
        Init::GreedySplit | Init::Given(_) => 1,
        _ => opts.restarts.max(1),
    };
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..restarts).map(|_| master.gen()).collect();
    let runs: Vec<QuantizationResult> = seeds
        .par_iter()
        .map(|&s| run_once(measure.atoms(), n, r, opts, s))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| {
            if run.distortion < best.distortion {
                run
            } else {
                best
            }
        })
        .unwrap())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Quantize every `n` on `Λ_{j,r}` for this fixed `j` instead of
    /// choosing the level per `n`.
    pub level: Option<u32>,
    /// Smallest ratio `φ_{j,r} / n` accepted when choosing the level for `n`.
    pub atoms_per_code: usize,
    pub cap: usize,
    pub lloyd: LloydOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            level: None,
            atoms_per_code: 50,
            cap: crate::antichain::DEFAULT_CAP,
            lloyd: LloydOptions {
                init: Init::GreedySplit,
                tol: 1e-10,
                max_iter: 500,
                ..LloydOptions::default()
            },
        }
    }
}

/// `n = 2^a, ..., 2^b`.
pub fn geometric_schedule(a: u32, b: u32) -> Vec<usize> {
    (a..=b).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitPoint {
    pub n: usize,
    pub level_j: u32,
    pub phi: usize,
    pub resolution: f64,
    pub discretization_error: f64,
    pub distortion: f64,
    /// `e_{n,r} = distortion^{1/r}`
    pub e_n_r: f64,
    /// `n^{r/s} e_{n,r}^r` at the probe exponent.
    pub coeff_at_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFit {
    pub order_r: f64,
    pub s_probe: f64,
    pub points: Vec<FitPoint>,
    /// Least-squares slope of `log n` against `-log e_{n,r}`.
    pub slope: f64,
    /// Half-width of a normal-approximation 95% interval for the slope.
    pub ci: f64,
}

impl DimensionFit {
    /// `|slope - s| / s`.
    pub fn relative_error(&self, s: f64) -> f64 {
        (self.slope - s).abs() / s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n;distortion;e_n_r;coeff_at_s")?;
        for p in &self.points {
            writeln!(out, "{};{};{};{}", p.n, p.distortion, p.e_n_r, p.coeff_at_s)?;
        }
        Ok(())
    }

    pub fn summary_json(&self, s_r_theory: f64) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "ci": self.ci,
            "s_r_theory": s_r_theory,
            "agree_within": self.relative_error(s_r_theory),
        })
    }
}

/// Quantizes the discretization `Λ_{j,r}` for each `n`, with `j` the smallest
/// level whose cardinality reaches `atoms_per_code · n` unless a level is
/// fixed, and fits the growth exponent of `n` against `1/e_{n,r}`.
pub fn dimension_fit(
    sys: &MarkovSystem,
    geom: &CylinderGeometry,
    schedule: &[usize],
    s_probe: f64,
    opts: &FitOptions,
) -> Result<DimensionFit, QuantizerError> {
    if schedule.is_empty() {
        return Err(QuantizerError::EmptySchedule);
    }
    let r = sys.order_r();
    let mut sorted = schedule.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut j = opts.level.unwrap_or(1);
    let mut chain = Antichain::lambda(sys, j, opts.cap)?;
    if sorted[0] == 0 {
        return Err(QuantizerError::InvalidN {
            n: 0,
            atoms: chain.phi(),
        });
    }
    let largest = sorted[sorted.len() - 1];
    if opts.level.is_some() && largest > chain.phi() {
        return Err(QuantizerError::InvalidN {
            n: largest,
            atoms: chain.phi(),
        });
    }
    let mut points = Vec::with_capacity(sorted.len());
    for &n in &sorted {
        let want = opts.atoms_per_code.saturating_mul(n);
        while opts.level.is_none() && chain.phi() < want {
            j += 1;
            chain = Antichain::lambda(sys, j, opts.cap)?;
        }
        let measure = discretize(sys, &chain, geom)?;
        let bound = discretization_error(sys, &chain);
        let q = lloyd(&measure, n, r, &opts.lloyd)?;
        if q.distortion < 2.0 * bound {
            return Err(QuantizerError::ResolutionTooCoarse {
                n,
                distortion: q.distortion,
                bound,
            });
        }
        points.push(FitPoint {
            n,
            level_j: j,
            phi: chain.phi(),
            resolution: measure.resolution(),
            discretization_error: bound,
            distortion: q.distortion,
            e_n_r: q.distortion.powf(1.0 / r),
            coeff_at_s: (n as f64).powf(r / s_probe) * q.distortion,
            converged: q.converged,
        });
    }
    let x: Vec<f64> = points.iter().map(|p| -p.e_n_r.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let (slope, ci) = match fit_line(&x, &y) {
        Some(f) => (f.slope, 1.96 * f.slope_stderr),
        None => (f64::NAN, f64::NAN),
    };
    Ok(DimensionFit {
        order_r: r,
        s_probe,
        points,
        slope,
        ci,
    })
}
