//! Validated Markov system: transition matrix, contraction ratios, initial
//! distribution and quantization order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::weight::Weight;

/// Row sums and the initial vector must equal one to within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Raw system definition, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub order_r: f64,
    pub transition: Vec<Vec<f64>>,
    pub ratios: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation_t: Option<f64>,
}

/// A single failed validation check. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },
    InvalidOrder(f64),
    NegativeProbability {
        row: usize,
        col: usize,
        value: f64,
    },
    RowNotStochastic {
        row: usize,
        sum: f64,
    },
    FanOutBelowTwo {
        row: usize,
        fan_out: usize,
    },
    RatioSupportMismatch {
        row: usize,
        col: usize,
    },
    RatioOutOfRange {
        row: usize,
        col: usize,
        value: f64,
    },
    InitialNotPositiveProbability {
        detail: String,
    },
    InvalidSeparation(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::NonFinite { what, row, col } => {
                write!(f, "non-finite {what} entry at ({}, {})", row + 1, col + 1)
            }
            Violation::InvalidOrder(r) => write!(f, "order r must be positive and finite, got {r}"),
            Violation::NegativeProbability { row, col, value } => {
                write!(f, "negative transition p[{}][{}] = {value}", row + 1, col + 1)
            }
            Violation::RowNotStochastic { row, sum } => {
                write!(f, "RowNotStochastic: row {} sums to {sum}", row + 1)
            }
            Violation::FanOutBelowTwo { row, fan_out } => write!(
                f,
                "FanOutBelowTwo: row {} has {fan_out} positive transition(s), need at least 2",
                row + 1
            ),
            Violation::RatioSupportMismatch { row, col } => write!(
                f,
                "RatioSupportMismatch: c[{r}][{c}] > 0 must hold exactly when p[{r}][{c}] > 0",
                r = row + 1,
                c = col + 1
            ),
            Violation::RatioOutOfRange { row, col, value } => write!(
                f,
                "RatioOutOfRange: c[{}][{}] = {value} is not in (0, 1)",
                row + 1,
                col + 1
            ),
            Violation::InitialNotPositiveProbability { detail } => {
                write!(f, "InitialNotPositiveProbability: {detail}")
            }
            Violation::InvalidSeparation(t) => {
                write!(f, "separation constant t must lie in (0, 1), got {t}")
            }
        }
    }
}

/// Every violated invariant of a rejected system.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid system ({} violation(s))", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl ValidationError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

/// A validated Markov system. Immutable once built.
#[derive(Debug, Clone)]
pub struct MarkovSystem {
    n: usize,
    transition: Vec<f64>,
    ratios: Vec<f64>,
    initial: Vec<f64>,
    order_r: f64,
    separation_t: Option<f64>,
    successors: Vec<Vec<usize>>,
    // p_ij * c_ij^r on each edge
    edge_weights: Vec<Option<Weight>>,
    eta: Weight,
}

impl MarkovSystem {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(spec: &SystemSpec) -> Result<MarkovSystem, ValidationError> {
        let mut violations = Vec::new();
        let n = spec.transition.len();

        if n < 2 {
            violations.push(Violation::Shape(format!("need at least 2 vertices, got {n}")));
        }
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|row| row.len() == n);
        if !square(&spec.transition) {
            violations.push(Violation::Shape("transition matrix is not square".into()));
        }
        if !square(&spec.ratios) {
            violations.push(Violation::Shape(format!("ratios must be {n}x{n}")));
        }
        if spec.initial.len() != n {
            violations.push(Violation::Shape(format!(
                "initial vector has length {}, expected {n}",
                spec.initial.len()
            )));
        }
        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        if !(spec.order_r.is_finite() && spec.order_r > 0.0) {
            violations.push(Violation::InvalidOrder(spec.order_r));
        }
        if let Some(t) = spec.separation_t {
            if !(t > 0.0 && t < 1.0) {
                violations.push(Violation::InvalidSeparation(t));
            }
        }

        for i in 0..n {
            let mut sum = 0.0;
            let mut fan_out = 0;
            for j in 0..n {
                let p = spec.transition[i][j];
                let c = spec.ratios[i][j];
                if !p.is_finite() {
                    violations.push(Violation::NonFinite {
                        what: "transition",
                        row: i,
                        col: j,
                    });
                    continue;
                }
                if !c.is_finite() {
                    violations.push(Violation::NonFinite {
                        what: "ratio",
                        row: i,
                        col: j,
                    });
                    continue;
                }
                if p < 0.0 {
                    violations.push(Violation::NegativeProbability {
                        row: i,
                        col: j,
                        value: p,
                    });
                }
                sum += p;
                if p > 0.0 {
                    fan_out += 1;
                }
                if (p > 0.0) != (c > 0.0) {
                    violations.push(Violation::RatioSupportMismatch { row: i, col: j });
                } else if c != 0.0 && !(c > 0.0 && c < 1.0) {
                    violations.push(Violation::RatioOutOfRange {
                        row: i,
                        col: j,
                        value: c,
                    });
                }
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                violations.push(Violation::RowNotStochastic { row: i, sum });
            }
            if fan_out < 2 {
                violations.push(Violation::FanOutBelowTwo { row: i, fan_out });
            }
        }

        let chi_sum: f64 = spec.initial.iter().sum();
        if let Some((i, &x)) = spec
            .initial
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x > 0.0))
        {
            violations.push(Violation::InitialNotPositiveProbability {
                detail: format!("chi[{}] = {x} is not positive", i + 1),
            });
        } else if (chi_sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(Violation::InitialNotPositiveProbability {
                detail: format!("initial vector sums to {chi_sum}"),
            });
        }

        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        let r = spec.order_r;
        let transition: Vec<f64> = spec.transition.iter().flatten().copied().collect();
        let ratios: Vec<f64> = spec.ratios.iter().flatten().copied().collect();
        let successors: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| transition[i * n + j] > 0.0).collect())
            .collect();
        let edge_weights: Vec<Option<Weight>> = transition
            .iter()
            .zip(&ratios)
            .map(|(&p, &c)| if p > 0.0 { edge_weight(p, c, r) } else { None })
            .collect();
        if edge_weights
            .iter()
            .zip(&transition)
            .any(|(w, &p)| p > 0.0 && w.is_none())
        {
            return Err(ValidationError {
                violations: vec![Violation::Shape(
                    "an edge weight p*c^r underflows the floating-point range".into(),
                )],
            });
        }

        let min_positive = |m: &[f64]| {
            m.iter()
                .copied()
                .filter(|&x| x > 0.0)
                .fold(f64::INFINITY, f64::min)
        };
        let p_min = min_positive(&transition);
        let c_min = min_positive(&ratios);
        let eta = edge_weight(p_min, c_min, r).ok_or_else(|| ValidationError {
            violations: vec![Violation::Shape("eta = p_min * c_min^r underflows".into())],
        })?;

        Ok(MarkovSystem {
            n,
            transition,
            ratios,
            initial: spec.initial.clone(),
            order_r: r,
            separation_t: spec.separation_t,
            successors,
            edge_weights,
            eta,
        })
    }

    pub fn from_json(text: &str) -> Result<MarkovSystem, SystemLoadError> {
        let spec: SystemSpec = serde_json::from_str(text)?;
        Ok(MarkovSystem::validate(&spec)?)
    }

    pub fn to_spec(&self) -> SystemSpec {
        let n = self.n;
        let rows = |m: &[f64]| m.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>();
        SystemSpec {
            order_r: self.order_r,
            transition: rows(&self.transition),
            ratios: rows(&self.ratios),
            initial: self.initial.clone(),
            separation_t: self.separation_t,
        }
    }

    /// Same graph and measure with a different quantization order.
    pub fn with_order(&self, r: f64) -> Result<MarkovSystem, ValidationError> {
        let mut spec = self.to_spec();
        spec.order_r = r;
        MarkovSystem::validate(&spec)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order_r(&self) -> f64 {
        self.order_r
    }

    pub fn separation_t(&self) -> Option<f64> {
        self.separation_t
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.n + j]
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.ratios[i * self.n + j]
    }

    pub fn chi(&self, i: usize) -> f64 {
        self.initial[i]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.p(i, j) > 0.0
    }

    /// Successors of `i` in ascending order.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    /// `p_ij * c_ij^r`, or `None` when there is no edge.
    pub fn edge_weight(&self, i: usize, j: usize) -> Option<Weight> {
        self.edge_weights[i * self.n + j]
    }

    /// `eta = p_min * c_min^r`, minima taken over the edges.
    pub fn eta(&self) -> Weight {
        self.eta
    }

    fn edge_extreme(&self, m: &[f64], pick: fn(f64, f64) -> f64, init: f64) -> f64 {
        m.iter().copied().filter(|&x| x > 0.0).fold(init, pick)
    }

    pub fn p_min(&self) -> f64 {
        self.edge_extreme(&self.transition, f64::min, f64::INFINITY)
    }

    pub fn p_max(&self) -> f64 {
        self.edge_extreme(&self.transition, f64::max, 0.0)
    }

    pub fn c_min(&self) -> f64 {
        self.edge_extreme(&self.ratios, f64::min, f64::INFINITY)
    }

    pub fn c_max(&self) -> f64 {
        self.edge_extreme(&self.ratios, f64::max, 0.0)
    }

    pub fn chi_min(&self) -> f64 {
        self.initial.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn chi_max(&self) -> f64 {
        self.initial.iter().copied().fold(0.0, f64::max)
    }
}

fn edge_weight(p: f64, c: f64, r: f64) -> Option<Weight> {
    let cr = Weight::new(c.powf(r))?;
    Some(Weight::new(p)? * cr)
}

#[derive(Debug, thiserror::Error)]
pub enum SystemLoadError {
    #[error("malformed system JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn accepts_example_two() {
        let sys = MarkovSystem::validate(&fixtures::example_two_spec(1.0)).unwrap();
        assert_eq!(sys.n(), 4);
        assert_eq!(sys.successors(0), &[0, 1, 2]);
        assert_eq!(sys.successors(3), &[2, 3]);
        // eta = 1/4 * 1/8
        assert_eq!(sys.eta().value(), 1.0 / 32.0);
    }

    #[test]
    fn identity_like_rows_fail_fan_out() {
        let spec = SystemSpec {
            order_r: 1.0,
            transition: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ratios: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
            initial: vec![0.5, 0.5],
            separation_t: None,
        };
        let err = MarkovSystem::validate(&spec).unwrap_err();
        assert_eq!(
            err.violations,
            vec![
                Violation::FanOutBelowTwo { row: 0, fan_out: 1 },
                Violation::FanOutBelowTwo { row: 1, fan_out: 1 },
            ]
        );
    }

    #[test]
    fn short_row_is_not_stochastic() {
        let mut spec = fixtures::homogeneous_spec(1.0);
        spec.transition[1] = vec![0.45, 0.45];
        let err = MarkovSystem::validate(&spec).unwrap_err();
        assert!(err.contains(|v| matches!(v, Violation::RowNotStochastic { row: 1, .. })));
        assert_eq!(err.violations.len(), 1);
    }

    #[test]
    fn reports_every_violation() {
        let spec = SystemSpec {
            order_r: 1.0,
            transition: vec![vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0], vec![0.3, 0.3, 0.3]],
            ratios: vec![vec![0.2, 0.0, 0.1], vec![0.0, 1.5, 0.0], vec![0.2, 0.2, 0.2]],
            initial: vec![0.5, 0.5, 0.0],
            separation_t: None,
        };
        let err = MarkovSystem::validate(&spec).unwrap_err();
        assert!(err.contains(|v| matches!(v, Violation::RatioSupportMismatch { row: 0, col: 1 })));
        assert!(err.contains(|v| matches!(v, Violation::RatioSupportMismatch { row: 0, col: 2 })));
        assert!(err.contains(|v| matches!(v, Violation::RatioOutOfRange { row: 1, col: 1, .. })));
        assert!(err.contains(|v| matches!(v, Violation::FanOutBelowTwo { row: 1, .. })));
        assert!(err.contains(|v| matches!(v, Violation::RowNotStochastic { row: 2, .. })));
        assert!(err.contains(|v| matches!(v, Violation::InitialNotPositiveProbability { .. })));
        let text = err.to_string();
        assert!(text.contains("RatioSupportMismatch"));
    }

    #[test]
    fn shape_errors_short_circuit() {
        let spec = SystemSpec {
            order_r: 1.0,
            transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ratios: vec![vec![0.3, 0.3]],
            initial: vec![0.5, 0.5],
            separation_t: None,
        };
        let err = MarkovSystem::validate(&spec).unwrap_err();
        assert!(matches!(err.violations[0], Violation::Shape(_)));
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"order_r": 1, "transition": [[0.5,0.5],[0.5,0.5]],
            "ratios": [[0.3333333333333333,0.3333333333333333],[0.3333333333333333,0.3333333333333333]],
            "initial": [0.5,0.5], "separation_t": 0.5}"#;
        let sys = MarkovSystem::from_json(text).unwrap();
        assert_eq!(sys.separation_t(), Some(0.5));
        let back = serde_json::to_string(&sys.to_spec()).unwrap();
        let again = MarkovSystem::from_json(&back).unwrap();
        assert_eq!(again.to_spec(), sys.to_spec());
        assert!(matches!(
            MarkovSystem::from_json("{"),
            Err(SystemLoadError::Json(_))
        ));
    }
}
