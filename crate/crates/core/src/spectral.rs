//! Spectral radius of `A_{G,s}`, the root `s_r` of `Ψ_G(s_r) = 1`, the
//! per-component roots `s_r(H)`, Perron vectors, and the classification of the
//! quantization coefficients.
//!
//! `A(e)` has entries `(p_ij c_ij^r)^e` on edges and zero elsewhere; the
//! dimension parametrization uses `e = s/(s+r)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{strongly_connected, ComparabilityVerdict, GraphError, SccDecomposition};
use crate::linalg::Matrix;
use crate::system::MarkovSystem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Stop power iteration once the Collatz-Wielandt bounds agree to this
    /// relative gap.
    pub radius_tol: f64,
    /// Bisection stops when the bracket is narrower than `tol * (1 + s)`.
    pub bisection_tol: f64,
    /// Relative tolerance for `s_r(H) = s_r` when forming the class M.
    pub tie_tol: f64,
    pub max_iter: usize,
    pub shift: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            radius_tol: 1e-13,
            bisection_tol: 1e-12,
            tie_tol: 1e-7,
            max_iter: 100_000,
            shift: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("power iteration did not converge after {iterations} iterations (bound gap {gap:e}); tolerance too tight")]
    NonConvergence { iterations: usize, gap: f64 },
    #[error("matrix has a negative or non-finite entry")]
    NotNonnegative,
    #[error("vertex set {0:?} carries no cycle, so Ψ has no root")]
    TrivialComponent(Vec<usize>),
    #[error("could not bracket the root: {0}")]
    Bracket(String),
    #[error("s_r = {direct} disagrees with max_H s_r(H) = {max}")]
    FactorMismatch { direct: f64, max: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Perron root with a positive eigenvector normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Shifted power iteration on `m + shift·I`.
///
/// Converges for irreducible nonnegative matrices, periodic ones included,
/// since the shift makes the Perron root strictly dominant. The stopping test
/// uses the Collatz-Wielandt bounds `min (mx)_i/x_i ≤ ρ ≤ max (mx)_i/x_i`.
pub fn power_iteration(m: &Matrix, opts: &SpectralOptions) -> Result<PerronPair, SpectralError> {
    let n = m.dim();
    if !m.is_nonnegative() {
        return Err(SpectralError::NotNonnegative);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let y = m.mul_vec(&x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let q = yi / xi;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if hi == 0.0 {
            return Ok(PerronPair {
                value: 0.0,
                vector: x,
                iterations: it,
            });
        }
        gap = (hi - lo) / hi;
        if gap <= opts.radius_tol {
            return Ok(PerronPair {
                value: 0.5 * (lo + hi),
                vector: x,
                iterations: it,
            });
        }
        let mut z: Vec<f64> = y.iter().zip(&x).map(|(yi, xi)| yi + opts.shift * xi).collect();
        let total: f64 = z.iter().sum();
        if !(total.is_finite() && total > 0.0) || z.iter().any(|&v| v <= 0.0) {
            break;
        }
        z.iter_mut().for_each(|v| *v /= total);
        x = z;
    }
    Err(SpectralError::NonConvergence {
        iterations: opts.max_iter,
        gap,
    })
}

/// Spectral radius of a nonnegative matrix.
///
/// The support graph is split into strongly connected blocks; the radius is
/// the largest Perron root among the irreducible diagonal blocks (1×1 null
/// blocks contribute zero).
pub fn spectral_radius(m: &Matrix, opts: &SpectralOptions) -> Result<f64, SpectralError> {
    if !m.is_nonnegative() || m.rows().iter().flatten().any(|x| !x.is_finite()) {
        return Err(SpectralError::NotNonnegative);
    }
    let mut best = 0.0f64;
    for block in strongly_connected(&m.support()) {
        let rho = if block.len() == 1 {
            m[(block[0], block[0])]
        } else {
            power_iteration(&m.restrict(&block), opts)?.value
        };
        best = best.max(rho);
    }
    Ok(best)
}

/// `A(e)` with entries `(p_ij c_ij^r)^e` on edges; `e = 0` gives the adjacency matrix.
pub fn build_matrix(sys: &MarkovSystem, exponent: f64) -> Matrix {
    let n = sys.n();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for &j in sys.successors(i) {
            m[(i, j)] = sys.edge_weight(i, j).unwrap().powf(exponent);
        }
    }
    m
}

/// `A_{G,s} = A(s/(s+r))`.
pub fn dimension_matrix(sys: &MarkovSystem, s: f64) -> Matrix {
    build_matrix(sys, s / (s + sys.order_r()))
}

fn restricted_dimension_matrix(sys: &MarkovSystem, subset: &[usize], s: f64) -> Matrix {
    let e = s / (s + sys.order_r());
    let mut m = Matrix::zeros(subset.len());
    for (a, &i) in subset.iter().enumerate() {
        for (b, &j) in subset.iter().enumerate() {
            if let Some(w) = sys.edge_weight(i, j) {
                m[(a, b)] = w.powf(e);
            }
        }
    }
    m
}

/// `Ψ_S(s)`: spectral radius of `A_{G,s}` restricted to `subset` (all of `G` if `None`).
pub fn psi(
    sys: &MarkovSystem,
    subset: Option<&[usize]>,
    s: f64,
    opts: &SpectralOptions,
) -> Result<f64, SpectralError> {
    match subset {
        None => spectral_radius(&dimension_matrix(sys, s), opts),
        Some(idx) => spectral_radius(&restricted_dimension_matrix(sys, idx, s), opts),
    }
}

/// Root of a strictly decreasing function `f` with `f(lo) > 1 > f(hi)`.
fn bisect_unit_level<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, SpectralError>
where
    F: FnMut(f64) -> Result<f64, SpectralError>,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut doublings = 0;
    while f(hi)? >= 1.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(SpectralError::Bracket(format!("Ψ stays ≥ 1 up to s = {hi:e}")));
        }
    }
    while hi - lo > tol * (1.0 + 0.5 * (lo + hi)) {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The unique `s > 0` with `Ψ_S(s) = 1` for `S = G` or a vertex subset.
///
/// A subset whose only cycle structure is a single cycle has `Ψ_S(0) = 1`
/// and returns zero. An acyclic subset has no root.
pub fn solve_sr(
    sys: &MarkovSystem,
    subset: Option<&[usize]>,
    opts: &SpectralOptions,
) -> Result<f64, SpectralError> {
    let at_zero = psi(sys, subset, 0.0, opts)?;
    if at_zero == 0.0 {
        let vertices = subset.map_or_else(|| (0..sys.n()).collect(), |s| s.to_vec());
        return Err(SpectralError::TrivialComponent(vertices));
    }
    if subset.is_none() && at_zero < 2.0 - 1e-9 {
        return Err(SpectralError::Bracket(format!(
            "Ψ_G(0) = {at_zero} < 2 despite fan-out ≥ 2"
        )));
    }
    if at_zero <= 1.0 {
        return Ok(0.0);
    }
    bisect_unit_level(
        |s| psi(sys, subset, s, opts),
        0.0,
        sys.order_r(),
        opts.bisection_tol,
    )
}

/// Root `k_r` of `Σ (q_i s_i^r)^{k/(k+r)} = 1` for a self-similar measure.
pub fn graf_luschgy_kr(probabilities: &[f64], ratios: &[f64], r: f64, tol: f64) -> f64 {
    assert_eq!(probabilities.len(), ratios.len());
    assert!(probabilities.len() >= 2, "need at least two maps");
    let logs: Vec<f64> = probabilities
        .iter()
        .zip(ratios)
        .map(|(q, c)| q.ln() + r * c.ln())
        .collect();
    let f = |k: f64| -> Result<f64, SpectralError> {
        let e = k / (k + r);
        Ok(logs.iter().map(|l| (l * e).exp()).sum())
    };
    bisect_unit_level(f, 0.0, r, tol).expect("the sum decreases below one")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// `0 < Q_lower ≤ Q_upper < ∞`: the class M is pairwise incomparable.
    FiniteUpperAndPositiveLower,
    /// `Q_lower = ∞`: two members of M are comparable.
    LowerCoefficientInfinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub index: usize,
    pub vertices: Vec<usize>,
    pub trivial: bool,
    pub s_r_h: Option<f64>,
    pub in_m: bool,
}

/// Perron data of `A_{H, s_r(H)}` for a component.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub component: usize,
    pub eigenvalue: f64,
    /// Right eigenvector `ξ`, unit sum, indexed like the component's vertices.
    pub right: Vec<f64>,
    /// Left eigenvector, unit sum.
    pub left: Vec<f64>,
    /// `‖A ξ − ξ‖_∞`
    pub residual: f64,
    /// `(1/max ξ, 1/min ξ)`
    pub delta: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub order_r: f64,
    pub s_r: f64,
    pub components: Vec<ComponentReport>,
    pub class_m: Vec<usize>,
    pub verdict: ComparabilityVerdict,
    pub classification: Classification,
    /// One entry per member of M.
    pub perron: Vec<PerronData>,
    /// `(δ1, δ2)` when `G` is irreducible.
    pub delta_bounds: Option<(f64, f64)>,
    /// `(M1, M2)`: uniform bounds for antichain sums inside any component.
    pub uniform_bounds: (f64, f64),
    /// `|s_r − max_H s_r(H)|`
    pub factor_gap: f64,
    /// `det(I − A_{G,s_r})`
    pub det_at_root: f64,
}

impl SpectralReport {
    /// `D_r(μ) = s_r`.
    pub fn dimension(&self) -> f64 {
        self.s_r
    }

    pub fn exponent(&self) -> f64 {
        self.s_r / (self.s_r + self.order_r)
    }

    pub fn perron_for(&self, component: usize) -> Option<&PerronData> {
        self.perron.iter().find(|p| p.component == component)
    }

    /// Vertices outside every member of M (the set F).
    pub fn complement_of_m(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .components
            .iter()
            .filter(|c| !c.in_m)
            .flat_map(|c| c.vertices.iter().copied())
            .collect();
        f.sort_unstable();
        f
    }

    pub fn to_json(&self, dec: &SccDecomposition) -> serde_json::Value {
        let one_based = |v: &[usize]| v.iter().map(|x| x + 1).collect::<Vec<_>>();
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "order_r": self.order_r,
            "s_r": self.s_r,
            "dimension": self.dimension(),
            "components": self.components.iter().map(|c| serde_json::json!({
                "vertices": one_based(&c.vertices),
                "trivial": c.trivial,
                "s_r_h": c.s_r_h,
                "in_M": c.in_m,
            })).collect::<Vec<_>>(),
            "class_m": one_based(&self.class_m),
            "classification": self.classification,
            "delta_bounds": self.delta_bounds.map(|(a, b)| [a, b]),
            "uniform_bounds": [self.uniform_bounds.0, self.uniform_bounds.1],
            "perron": self.perron.iter().map(|p| serde_json::json!({
                "component": p.component + 1,
                "right": p.right,
                "left": p.left,
                "delta": [p.delta.0, p.delta.1],
                "residual": p.residual,
            })).collect::<Vec<_>>(),
            "factor_gap": self.factor_gap,
            "det_at_root": self.det_at_root,
            "witness_pairs": self.verdict.to_json(dec)["pairs"],
        })
    }
}

fn perron_data(
    sys: &MarkovSystem,
    component: usize,
    vertices: &[usize],
    s: f64,
    opts: &SpectralOptions,
) -> Result<PerronData, SpectralError> {
    let m = restricted_dimension_matrix(sys, vertices, s);
    let right = power_iteration(&m, opts)?;
    let left = power_iteration(&m.transpose(), opts)?;
    let image = m.mul_vec(&right.vector);
    let residual = image
        .iter()
        .zip(&right.vector)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let max = right.vector.iter().copied().fold(0.0, f64::max);
    let min = right.vector.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PerronData {
        component,
        eigenvalue: right.value,
        right: right.vector,
        left: left.vector,
        residual,
        delta: (1.0 / max, 1.0 / min),
    })
}

/// `det(I − A_{H,s})` multiplied over the nontrivial components.
pub fn det_block_product(sys: &MarkovSystem, dec: &SccDecomposition, s: f64) -> f64 {
    dec.components()
        .iter()
        .filter(|c| !c.trivial)
        .map(|c| {
            restricted_dimension_matrix(sys, &c.vertices, s)
                .identity_minus()
                .det()
        })
        .product()
}

/// Computes `s_r`, every `s_r(H)`, the class M and the coefficient classification.
pub fn classify(
    sys: &MarkovSystem,
    dec: &SccDecomposition,
    opts: &SpectralOptions,
) -> Result<SpectralReport, SpectralError> {
    let s_r = solve_sr(sys, None, opts)?;

    let per_component: Vec<Option<f64>> = dec
        .components()
        .par_iter()
        .map(|c| {
            if c.trivial {
                Ok(None)
            } else {
                solve_sr(sys, Some(&c.vertices), opts).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;

    let max_h = per_component.iter().flatten().copied().fold(0.0, f64::max);
    let factor_gap = (s_r - max_h).abs();
    if factor_gap >= 1e-8 {
        return Err(SpectralError::FactorMismatch {
            direct: s_r,
            max: max_h,
        });
    }

    let components: Vec<ComponentReport> = dec
        .components()
        .iter()
        .zip(&per_component)
        .enumerate()
        .map(|(index, (c, s_h))| ComponentReport {
            index,
            vertices: c.vertices.clone(),
            trivial: c.trivial,
            s_r_h: *s_h,
            in_m: s_h.is_some_and(|x| s_r - x < opts.tie_tol * s_r),
        })
        .collect();
    let class_m: Vec<usize> = components.iter().filter(|c| c.in_m).map(|c| c.index).collect();
    let verdict = dec.comparability(&class_m)?;
    let classification = if verdict.all_incomparable() {
        Classification::FiniteUpperAndPositiveLower
    } else {
        Classification::LowerCoefficientInfinite
    };

    let mut perron = Vec::new();
    let mut m1 = f64::INFINITY;
    let mut m2 = 0.0f64;
    for c in components.iter().filter(|c| !c.trivial) {
        let s_h = c.s_r_h.expect("nontrivial components have a root");
        let data = perron_data(sys, c.index, &c.vertices, s_h, opts)?;
        let max = data.right.iter().copied().fold(0.0, f64::max);
        let min = data.right.iter().copied().fold(f64::INFINITY, f64::min);
        m1 = m1.min(min / max);
        m2 = m2.max(1.0 / min);
        if c.in_m {
            perron.push(data);
        }
    }

    let delta_bounds = if dec.is_irreducible() {
        perron.first().map(|p| p.delta)
    } else {
        None
    };
    let det_at_root = dimension_matrix(sys, s_r).identity_minus().det();

    Ok(SpectralReport {
        order_r: sys.order_r(),
        s_r,
        components,
        class_m,
        verdict,
        classification,
        perron,
        delta_bounds,
        uniform_bounds: (m1, m2),
        factor_gap,
        det_at_root,
    })
}
