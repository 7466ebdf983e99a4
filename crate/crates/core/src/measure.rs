//! Diagnostics on antichains: the distortion proxy `Σ p_σ c_σ^r`, normalized
//! sums `Σ (p_σ c_σ^r)^{s/(s+r)}`, the growth series `Q_k` that separates the
//! finite and infinite coefficient cases, and the decay of word sums on the
//! vertex set outside the class M.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::antichain::{Antichain, AntichainError};
use crate::linalg::Matrix;
use crate::numeric::{compensated_sum, fit_line};
use crate::spectral::{build_matrix, Classification, SpectralReport};
use crate::system::MarkovSystem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("antichain is incomplete (capped or not maximal)")]
    IncompleteAntichain,
    #[error("need at least {need} levels, got {got}")]
    InsufficientLevels { got: usize, need: usize },
    #[error(transparent)]
    Antichain(#[from] AntichainError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntichainDiagnostics {
    pub level_j: Option<u32>,
    pub phi: usize,
    /// `Σ p_σ c_σ^r`, which is comparable to `e^r_{φ,r}(μ)`.
    pub proxy: f64,
    /// `Σ χ_{σ1} p_σ c_σ^r = Σ μ(J_σ) |J_σ|^r`
    pub measure_proxy: f64,
    pub exponent_s: f64,
    /// `Σ (p_σ c_σ^r)^{s/(s+r)}`
    pub normalized_sum: f64,
    pub min_len: usize,
    pub max_len: usize,
}

pub fn diagnostics(
    sys: &MarkovSystem,
    chain: &Antichain,
    exponent_s: f64,
) -> Result<AntichainDiagnostics, MeasureError> {
    if !chain.is_complete() {
        return Err(MeasureError::IncompleteAntichain);
    }
    let r = sys.order_r();
    let entries = chain.entries();
    let proxy = compensated_sum(entries.iter().map(|e| e.weights.level.value()));
    let measure_proxy = compensated_sum(
        entries
            .iter()
            .map(|e| sys.chi(e.word.first().unwrap()) * e.weights.level.value()),
    );
    let normalized_sum = compensated_sum(entries.iter().map(|e| e.weights.normalized_term(exponent_s, r)));
    Ok(AntichainDiagnostics {
        level_j: chain.level_j(),
        phi: chain.phi(),
        proxy,
        measure_proxy,
        exponent_s,
        normalized_sum,
        min_len: chain.min_len(),
        max_len: chain.max_len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyFit {
    pub slope: f64,
    pub residual: f64,
    /// `(j, φ_{j,r}, proxy_j)`
    pub levels: Vec<(u32, usize, f64)>,
}

/// Slope of `log φ_{j,r}` against `-log proxy_j^{1/r}` across levels.
pub fn proxy_dimension_estimate(
    sys: &MarkovSystem,
    j_range: RangeInclusive<u32>,
    cap: usize,
) -> Result<ProxyFit, MeasureError> {
    let count = j_range.clone().count();
    if count < 4 {
        return Err(MeasureError::InsufficientLevels { got: count, need: 4 });
    }
    let r = sys.order_r();
    let mut levels = Vec::with_capacity(count);
    for j in j_range {
        let chain = Antichain::lambda(sys, j, cap)?;
        let d = diagnostics(sys, &chain, 1.0)?;
        levels.push((j, d.phi, d.proxy));
    }
    let x: Vec<f64> = levels.iter().map(|&(_, _, p)| -p.ln() / r).collect();
    let y: Vec<f64> = levels.iter().map(|&(_, phi, _)| (phi as f64).ln()).collect();
    let fit = fit_line(&x, &y).ok_or(MeasureError::InsufficientLevels { got: count, need: 4 })?;
    Ok(ProxyFit {
        slope: fit.slope,
        residual: fit.residual,
        levels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Bounded,
    Increasing,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub levels: Vec<u32>,
    /// `Q_k = Σ_{σ∈Λ_{k,r}} (p_σ c_σ^r)^{s_r/(s_r+r)}`
    pub q: Vec<f64>,
    pub slope: f64,
    /// Mean of the last quarter of the series over the mean of its middle quarter.
    pub quartile_ratio: f64,
    pub trend: Trend,
}

/// Relative excess of the last-quartile mean over the mid-quartile mean
/// still accepted as `Bounded`.
pub const BOUNDED_TOL: f64 = 0.05;

impl GrowthSeries {
    /// `Bounded` must go with finite coefficients and `Increasing` with an
    /// infinite lower coefficient.
    pub fn agrees_with(&self, classification: Classification) -> bool {
        matches!(
            (self.trend, classification),
            (Trend::Bounded, Classification::FiniteUpperAndPositiveLower)
                | (Trend::Increasing, Classification::LowerCoefficientInfinite)
        )
    }
}

fn quartile_ratio(q: &[f64]) -> f64 {
    let len = q.len();
    let width = len.div_ceil(4);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let last = mean(&q[len - width..]);
    let start = (len - width) / 2;
    let mid = mean(&q[start..start + width]);
    last / mid
}

/// Classifies a finite series: `Bounded` when the last-quartile mean exceeds
/// the mid-quartile mean by at most 5% (a settling or decaying series),
/// `Increasing` when every step goes up and the fitted slope is positive,
/// `Indeterminate` otherwise.
pub fn trend_of(levels: &[u32], q: &[f64]) -> (Trend, f64, f64) {
    let x: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    let slope = fit_line(&x, q).map_or(0.0, |f| f.slope);
    let ratio = quartile_ratio(q);
    let trend = if ratio <= 1.0 + BOUNDED_TOL {
        Trend::Bounded
    } else if q.windows(2).all(|w| w[1] > w[0]) && slope > 0.0 {
        Trend::Increasing
    } else {
        Trend::Indeterminate
    };
    (trend, slope, ratio)
}

pub fn growth_series(
    sys: &MarkovSystem,
    report: &SpectralReport,
    k_range: RangeInclusive<u32>,
    cap: usize,
) -> Result<GrowthSeries, MeasureError> {
    let levels: Vec<u32> = k_range.collect();
    if levels.len() < 4 {
        return Err(MeasureError::InsufficientLevels {
            got: levels.len(),
            need: 4,
        });
    }
    let mut q = Vec::with_capacity(levels.len());
    for &k in &levels {
        let chain = Antichain::lambda(sys, k, cap)?;
        q.push(diagnostics(sys, &chain, report.s_r)?.normalized_sum);
    }
    let (trend, slope, quartile_ratio) = trend_of(&levels, &q);
    Ok(GrowthSeries {
        levels,
        q,
        slope,
        quartile_ratio,
        trend,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// The vertices outside every member of M, 0-based.
    pub f_vertices: Vec<usize>,
    /// `(n, Σ_{σ∈F_n} (p_σ c_σ^r)^{s_r/(s_r+r)})`
    pub sums: Vec<(usize, f64)>,
    /// Fitted geometric rate; zero when the sums vanish.
    pub rate: f64,
    pub passed: bool,
}

/// `Σ_{σ∈F_n} (p_σ c_σ^r)^e = ‖A_F(e)^{n-1} u‖₁` for each `n` in the range.
pub fn restricted_word_sums(
    sys: &MarkovSystem,
    subset: &[usize],
    exponent: f64,
    n_range: RangeInclusive<usize>,
) -> Vec<(usize, f64)> {
    let a: Matrix = build_matrix(sys, exponent).restrict(subset);
    let mut v = vec![1.0; subset.len()];
    let mut out = Vec::new();
    let mut power = 1;
    for n in n_range {
        if n == 0 {
            continue;
        }
        while power < n {
            v = a.mul_vec(&v);
            power += 1;
        }
        out.push((n, compensated_sum(v.iter().copied())));
    }
    out
}

/// Checks that word sums on `F = G \ ∪M` decay geometrically at `s_r`.
pub fn f_decay_check(
    sys: &MarkovSystem,
    report: &SpectralReport,
    n_range: RangeInclusive<usize>,
) -> DecayReport {
    let f = report.complement_of_m();
    if f.is_empty() {
        return DecayReport {
            f_vertices: f,
            sums: Vec::new(),
            rate: 0.0,
            passed: true,
        };
    }
    let sums = restricted_word_sums(sys, &f, report.exponent(), n_range);
    let positive: Vec<(f64, f64)> = sums
        .iter()
        .filter(|&&(_, s)| s > 0.0)
        .map(|&(n, s)| (n as f64, s.ln()))
        .collect();
    let rate = if positive.len() < sums.len() {
        // some F_n is empty, and then so is every longer one
        0.0
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        fit_line(&x, &y).map_or(f64::NAN, |fit| fit.slope.exp())
    };
    DecayReport {
        f_vertices: f,
        sums,
        rate,
        passed: rate < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antichain::{Scope, DEFAULT_CAP};
    use crate::graph::SccDecomposition;
    use crate::spectral::{classify, SpectralOptions};
    use crate::{fixtures, Word};

    fn ln2_ln3() -> f64 {
        2f64.ln() / 3f64.ln()
    }

    #[test]
    fn homogeneous_cylinders_sum_to_two() {
        let sys = fixtures::homogeneous();
        for k in 1..=8 {
            let chain = Antichain::cylinders(&sys, k, DEFAULT_CAP).unwrap();
            let d = diagnostics(&sys, &chain, ln2_ln3()).unwrap();
            assert!(
                (d.normalized_sum - 2.0).abs() < 1e-12,
                "k = {k}: {}",
                d.normalized_sum
            );
        }
    }

    #[test]
    fn homogeneous_level_one_proxy() {
        let sys = fixtures::homogeneous();
        let chain = Antichain::lambda(&sys, 1, DEFAULT_CAP).unwrap();
        let d = diagnostics(&sys, &chain, ln2_ln3()).unwrap();
        assert_eq!(d.phi, 8);
        assert!((d.proxy - 2.0 / 9.0).abs() < 1e-15);
        assert!((d.measure_proxy - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!((d.min_len, d.max_len), (3, 3));
    }

    #[test]
    fn incomplete_chain_is_rejected() {
        let sys = fixtures::homogeneous();
        let w = |l: &[usize]| Word::new(&sys, l.to_vec()).unwrap();
        let partial = Antichain::from_words(&sys, vec![w(&[0])], &Scope::all()).unwrap();
        assert_eq!(
            diagnostics(&sys, &partial, 0.5),
            Err(MeasureError::IncompleteAntichain)
        );
    }

    #[test]
    fn proxy_window_and_chi_weighting() {
        for sys in [fixtures::example_two(1.0), fixtures::example_one(3, 1.0)] {
            let eta = sys.eta();
            for j in 1..=4u32 {
                let chain = Antichain::lambda(&sys, j, DEFAULT_CAP).unwrap();
                let d = diagnostics(&sys, &chain, 0.5).unwrap();
                let phi = d.phi as f64;
                assert!(d.proxy <= phi * eta.powi(j).value());
                assert!(d.proxy >= phi * eta.powi(j + 1).value());
                assert!(d.measure_proxy <= sys.chi_max() * d.proxy * (1.0 + 1e-12));
                assert!(d.measure_proxy >= sys.chi_min() * d.proxy * (1.0 - 1e-12));
                assert!(d.min_len <= d.max_len);
            }
        }
    }

    #[test]
    fn lengths_grow_linearly() {
        let sys = fixtures::example_two(1.0);
        let levels: Vec<(f64, f64)> = (1..=8u32)
            .map(|j| {
                let c = Antichain::lambda(&sys, j, DEFAULT_CAP).unwrap();
                (c.min_len() as f64 / j as f64, c.max_len() as f64 / j as f64)
            })
            .collect();
        let a1 = levels.iter().map(|l| l.0).fold(f64::INFINITY, f64::min);
        let a2 = levels.iter().map(|l| l.1).fold(0.0, f64::max);
        assert!(a1 > 0.5 && a2 < 4.0, "{a1} {a2}");
    }

    #[test]
    fn proxy_slope_homogeneous() {
        let sys = fixtures::homogeneous();
        let fit = proxy_dimension_estimate(&sys, 1..=6, DEFAULT_CAP).unwrap();
        assert!((fit.slope - ln2_ln3()).abs() < 0.05 * ln2_ln3());
        assert_eq!(
            proxy_dimension_estimate(&sys, 1..=1, DEFAULT_CAP),
            Err(MeasureError::InsufficientLevels { got: 1, need: 4 })
        );
    }

    #[test]
    fn proxy_slope_example_one() {
        let sys = fixtures::example_one(3, 1.0);
        let dec = SccDecomposition::new(&sys);
        let rep = classify(&sys, &dec, &SpectralOptions::default()).unwrap();
        let fit = proxy_dimension_estimate(&sys, 3..=9, DEFAULT_CAP).unwrap();
        assert!(
            (fit.slope - rep.s_r).abs() < 0.10 * rep.s_r,
            "{} vs {}",
            fit.slope,
            rep.s_r
        );
    }

    #[test]
    fn trend_rules() {
        let ks: Vec<u32> = (2..=10).collect();
        let flat = vec![1.0, 1.02, 0.99, 1.01, 1.0, 1.0, 0.98, 1.01, 1.0];
        assert_eq!(trend_of(&ks, &flat).0, Trend::Bounded);
        let up: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        assert_eq!(trend_of(&ks, &up).0, Trend::Increasing);
        let down: Vec<f64> = ks.iter().map(|&k| 1.0 + 1.0 / k as f64).collect();
        assert_eq!(trend_of(&ks, &down).0, Trend::Bounded);
        let zigzag = vec![1.0, 3.0, 2.0, 4.0, 3.0, 5.0, 4.0, 6.0, 5.0];
        assert_eq!(trend_of(&ks, &zigzag).0, Trend::Indeterminate);
    }

    #[test]
    fn decay_trivial_when_m_covers_g() {
        let sys = fixtures::example_two(1.0);
        let dec = SccDecomposition::new(&sys);
        let rep = classify(&sys, &dec, &SpectralOptions::default()).unwrap();
        let d = f_decay_check(&sys, &rep, 1..=8);
        assert!(d.passed && d.f_vertices.is_empty() && d.sums.is_empty());
    }

    #[test]
    fn decay_on_perturbed_example_one() {
        let sys = fixtures::example_one_perturbed(3, 1.0, 0.5);
        let dec = SccDecomposition::new(&sys);
        let rep = classify(&sys, &dec, &SpectralOptions::default()).unwrap();
        assert_eq!(rep.class_m, vec![0]);
        let d = f_decay_check(&sys, &rep, 1..=12);
        assert_eq!(d.f_vertices, vec![2, 3, 4]);
        assert!(d.passed && d.rate < 1.0, "rate {}", d.rate);
    }

    #[test]
    fn decay_vanishes_on_loopless_vertex() {
        let sys = fixtures::with_trivial_vertex();
        let dec = SccDecomposition::new(&sys);
        let rep = classify(&sys, &dec, &SpectralOptions::default()).unwrap();
        assert_eq!(rep.complement_of_m(), vec![0]);
        let d = f_decay_check(&sys, &rep, 1..=5);
        assert_eq!(d.sums[0], (1, 1.0));
        assert!(d.sums[1..].iter().all(|&(_, s)| s == 0.0));
        assert_eq!(d.rate, 0.0);
        assert!(d.passed);
    }

    #[test]
    fn matrix_powers_match_word_enumeration() {
        let systems = [
            fixtures::example_one_perturbed(3, 1.0, 0.5),
            fixtures::with_trivial_vertex(),
            fixtures::random_system(17, 5),
            fixtures::random_system(23, 4),
        ];
        for sys in systems {
            let subset: Vec<usize> = (0..sys.n()).filter(|v| v % 2 == 0 || *v == 1).collect();
            let scope = Scope::within(sys.n(), &subset);
            let e = 0.37;
            let by_matrix = restricted_word_sums(&sys, &subset, e, 1..=6);
            for (n, s) in by_matrix {
                let words = Antichain::cylinders_in(&sys, n, DEFAULT_CAP, &scope).unwrap();
                let direct: f64 = words.entries().iter().map(|x| x.weights.level.powf(e)).sum();
                assert!(
                    (s - direct).abs() <= 1e-12 * direct.max(1.0),
                    "n = {n}: {s} vs {direct}"
                );
            }
        }
    }
}
