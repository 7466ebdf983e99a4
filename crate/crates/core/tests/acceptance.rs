//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use quantdim::fixtures;
use quantdim::geometry::random_word;
use quantdim::graph::Relation;
use quantdim::linalg::Matrix;
use quantdim::quantizer::{geometric_schedule, Atom, Provenance};
use quantdim::spectral::build_matrix;
use quantdim::{
    classify, diagnostics, dimension_fit, growth_series, lloyd, sample_measure, solve_sr, Antichain,
    AntichainError, Classification, CylinderGeometry, DiscreteMeasure, FitOptions, LloydOptions,
    MarkovSystem, SccDecomposition, SpectralOptions, SpectralReport, Trend, Word,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(sys: &MarkovSystem) -> (SccDecomposition, SpectralReport) {
    let dec = SccDecomposition::new(sys);
    let rep = classify(sys, &dec, &SpectralOptions::default()).expect("classification succeeds");
    (dec, rep)
}

fn within_time(limit: Duration, start: Instant, mut o: Outcome) -> Outcome {
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.2?} (limit {:?})", o.detail, elapsed, limit);
    o.pass &= elapsed < limit;
    o
}

fn example_two_regression() -> Outcome {
    let start = Instant::now();
    let sys = fixtures::example_two(1.0);
    let opts = SpectralOptions::default();
    let s = solve_sr(&sys, None, &opts).unwrap();
    let h1 = solve_sr(&sys, Some(&[0, 1]), &opts).unwrap();
    let h2 = solve_sr(&sys, Some(&[2, 3]), &opts).unwrap();
    let (dec, rep) = report(&sys);
    let precedes = rep
        .verdict
        .pairs
        .iter()
        .any(|p| p.relation != Relation::Incomparable && dec.precedes(0, 1));
    let pass = (s - 1.0 / 3.0).abs() < 1e-9
        && (h1 - 1.0 / 3.0).abs() < 1e-8
        && (h2 - 1.0 / 3.0).abs() < 1e-8
        && rep.class_m.len() == 2
        && precedes
        && rep.classification == Classification::LowerCoefficientInfinite;
    within_time(
        Duration::from_secs(1),
        start,
        outcome(
            pass,
            format!(
                "s_r = {s:.12}, s_r(H1) = {h1:.12}, s_r(H2) = {h2:.12}, |M| = {}, H1 precedes H2: {precedes}, {:?}",
                rep.class_m.len(),
                rep.classification
            ),
        ),
    )
}

fn example_one_regression() -> Outcome {
    let start = Instant::now();
    let sys = fixtures::example_one(42, 1.0);
    let opts = SpectralOptions::default();
    let a = solve_sr(&sys, Some(&[0, 1]), &opts).unwrap();
    let b = solve_sr(&sys, Some(&[2, 3, 4]), &opts).unwrap();
    let (_, rep) = report(&sys);
    let pass = (a - b).abs() < 1e-9 && rep.classification == Classification::FiniteUpperAndPositiveLower;
    within_time(
        Duration::from_secs(1),
        start,
        outcome(
            pass,
            format!("s_r(H1) = {a:.12}, s_r(H2) = {b:.12}, {:?}", rep.classification),
        ),
    )
}

fn factor_identity() -> Outcome {
    let start = Instant::now();
    let opts = SpectralOptions::default();
    let mut worst_gap = 0.0f64;
    let mut worst_det = 0.0f64;
    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 5);
        let sys = fixtures::random_system(seed, n);
        let dec = SccDecomposition::new(&sys);
        let s = solve_sr(&sys, None, &opts).unwrap();
        let max_h = dec
            .components()
            .iter()
            .filter(|c| !c.trivial)
            .map(|c| solve_sr(&sys, Some(&c.vertices), &opts).unwrap())
            .fold(0.0, f64::max);
        let a: Matrix = build_matrix(&sys, s / (s + sys.order_r()));
        worst_gap = worst_gap.max((s - max_h).abs());
        worst_det = worst_det.max(a.identity_minus().det().abs());
    }
    within_time(
        Duration::from_secs(30),
        start,
        outcome(
            worst_gap < 1e-8 && worst_det < 1e-7,
            format!("200 systems, max |s_r - max_H s_r(H)| = {worst_gap:.2e}, max |det| = {worst_det:.2e}"),
        ),
    )
}

fn antichain_bounds() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut violations = Vec::new();
    for seed in 0..20u64 {
        let n = 2 + (seed as usize % 3);
        let sys = fixtures::random_irreducible(seed, n);
        let (_, rep) = report(&sys);
        let (d1, d2) = rep.delta_bounds.expect("irreducible");
        let mut check = |label: String, chain: &Antichain| {
            let sum = diagnostics(&sys, chain, rep.s_r).unwrap().normalized_sum;
            checked += 1;
            if sum < d1 - 1e-9 || sum > d2 + 1e-9 {
                violations.push(format!("seed {seed} {label}: {sum} not in [{d1}, {d2}]"));
            }
        };
        for j in 1.. {
            match Antichain::lambda(&sys, j, 100_000) {
                Ok(chain) => check(format!("Λ_{j}"), &chain),
                Err(AntichainError::CapExceeded { .. }) => break,
                Err(e) => panic!("{e}"),
            }
        }
        for k in 1..=8 {
            check(format!("Ω_{k}"), &Antichain::cylinders(&sys, k, 1 << 20).unwrap());
        }
    }
    let homogeneous = fixtures::homogeneous();
    let s = 2f64.ln() / 3f64.ln();
    let homogeneous_worst = (1..=8)
        .map(|k| {
            let chain = Antichain::cylinders(&homogeneous, k, 1 << 10).unwrap();
            (diagnostics(&homogeneous, &chain, s).unwrap().normalized_sum - 2.0).abs()
        })
        .fold(0.0, f64::max);
    let pass = violations.is_empty() && homogeneous_worst < 1e-10;
    let mut detail = format!(
        "{checked} antichains on 20 systems, {} outside [δ1, δ2]; homogeneous max |sum - 2| = {homogeneous_worst:.1e}",
        violations.len()
    );
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    within_time(Duration::from_secs(30), start, outcome(pass, detail))
}

fn growth_dichotomy() -> Outcome {
    let start = Instant::now();
    let cap = 2_000_000;
    let two = fixtures::example_two(1.0);
    let (_, rep_two) = report(&two);
    let g_two = growth_series(&two, &rep_two, 2..=10, cap).unwrap();
    let increasing = g_two.q.windows(2).all(|w| w[1] > w[0]);

    let one = fixtures::example_one(42, 1.0);
    let (_, rep_one) = report(&one);
    let g_one = growth_series(&one, &rep_one, 2..=10, cap).unwrap();
    let (m1, m2) = rep_one.uniform_bounds;
    let n = one.n() as f64;
    let in_bounds = g_one.q.iter().all(|&q| q >= n * m1 - 1e-9 && q <= n * m2 + 1e-9);
    let bounded = (g_one.quartile_ratio - 1.0).abs() <= 0.05;

    let mut disagreements = Vec::new();
    let others: Vec<(&str, MarkovSystem)> = vec![
        ("homogeneous", fixtures::homogeneous()),
        ("example one seed 7", fixtures::example_one(7, 1.0)),
        ("example one r = 2", fixtures::example_one(3, 2.0)),
        (
            "example one perturbed",
            fixtures::example_one_perturbed(42, 1.0, 0.8),
        ),
        ("example two r = 2", fixtures::example_two(2.0)),
    ];
    let mut verdicts = vec![
        ("example two", g_two.agrees_with(rep_two.classification)),
        ("example one", g_one.agrees_with(rep_one.classification)),
    ];
    for (name, sys) in &others {
        let (_, rep) = report(sys);
        let g = growth_series(sys, &rep, 2..=10, cap).unwrap();
        verdicts.push((name, g.agrees_with(rep.classification)));
    }
    for (name, ok) in &verdicts {
        if !ok {
            disagreements.push(name.to_string());
        }
    }
    let pass =
        increasing && in_bounds && bounded && g_one.trend == Trend::Bounded && disagreements.is_empty();
    within_time(
        Duration::from_secs(60),
        start,
        outcome(
            pass,
            format!(
                "example two Q_k strictly increasing: {increasing} ({:.4} -> {:.4}); example one Q_k in [N·M1, N·M2]: {in_bounds}, quartile ratio {:.4}; verdict disagreements: {:?}",
                g_two.q[0],
                g_two.q[g_two.q.len() - 1],
                g_one.quartile_ratio,
                disagreements
            ),
        ),
    )
}

fn empirical_dimension() -> Outcome {
    let start = Instant::now();
    let schedule = geometric_schedule(2, 12);
    let opts = FitOptions::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, sys, s) in [
        ("homogeneous", fixtures::homogeneous(), 2f64.ln() / 3f64.ln()),
        ("example two", fixtures::example_two(1.0), 1.0 / 3.0),
    ] {
        let geom = CylinderGeometry::realize(&sys, None).unwrap();
        match dimension_fit(&sys, &geom, &schedule, s, &opts) {
            Ok(fit) => {
                let err = fit.relative_error(s);
                pass &= err <= 0.15;
                let coeff = fit.points.iter().map(|p| p.coeff_at_s).collect::<Vec<_>>();
                parts.push(format!(
                    "{name}: slope {:.4} vs {s:.4} (relative error {:.3}), coefficient {:.3} -> {:.3}",
                    fit.slope,
                    err,
                    coeff[0],
                    coeff[coeff.len() - 1]
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    within_time(Duration::from_secs(300), start, outcome(pass, parts.join("; ")))
}

fn cell_cost(cell: &[Atom], a: f64, r: f64) -> f64 {
    cell.iter()
        .map(|x| x.weight * (x.position - a).abs().powf(r))
        .sum()
}

fn best_cell_cost(cell: &[Atom], r: f64) -> f64 {
    if r == 2.0 {
        let mean = cell.iter().map(|a| a.weight * a.position).sum::<f64>()
            / cell.iter().map(|a| a.weight).sum::<f64>();
        return cell_cost(cell, mean, r);
    }
    if r <= 1.0 {
        return cell
            .iter()
            .map(|a| cell_cost(cell, a.position, r))
            .fold(f64::INFINITY, f64::min);
    }
    let (mut lo, mut hi) = (cell[0].position, cell[cell.len() - 1].position);
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if cell_cost(cell, a, r) <= cell_cost(cell, b, r) {
            hi = b;
        } else {
            lo = a;
        }
    }
    cell_cost(cell, 0.5 * (lo + hi), r)
}

fn exhaustive(atoms: &[Atom], n: usize, r: f64) -> f64 {
    if n == 1 {
        return best_cell_cost(atoms, r);
    }
    (1..=atoms.len() - (n - 1))
        .map(|k| best_cell_cost(&atoms[..k], r) + exhaustive(&atoms[k..], n - 1, r))
        .fold(f64::INFINITY, f64::min)
}

fn quantizer_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let orders = [1.0, 2.0, 1.5, 3.0, 0.5];
    let mut worst = 0.0f64;
    let mut misses = 0;
    for case in 0..100 {
        let count = rng.gen_range(3..=12);
        let raw: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(0.05..1.0)))
            .collect();
        let total: f64 = raw.iter().map(|p| p.1).sum();
        let atoms = raw
            .iter()
            .map(|&(position, w)| Atom {
                position,
                weight: w / total,
            })
            .collect();
        let measure = DiscreteMeasure::new(atoms, Provenance::Manual, 0.0).unwrap();
        let n = rng.gen_range(1..=3);
        let r = orders[case % orders.len()];
        let opts = LloydOptions {
            seed: case as u64,
            ..LloydOptions::default()
        };
        let q = lloyd(&measure, n, r, &opts).unwrap();
        let best = exhaustive(measure.atoms(), n, r);
        let gap = (q.distortion - best).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            misses += 1;
        }
    }
    within_time(
        Duration::from_secs(10),
        start,
        outcome(
            misses == 0,
            format!("100 instances, {misses} off the exhaustive optimum, max gap {worst:.1e}"),
        ),
    )
}

fn geometry_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut details = Vec::new();
    let mut pass = true;
    let fixtures_list: Vec<(&str, MarkovSystem)> = vec![
        ("homogeneous", fixtures::homogeneous()),
        ("example one", fixtures::example_one(42, 1.0)),
        ("example two", fixtures::example_two(1.0)),
    ];
    for (name, sys) in &fixtures_list {
        let geom = CylinderGeometry::realize(sys, None).unwrap();
        let t = geom.separation_t();
        let mut bad_len = 0;
        let mut bad_sep = 0;
        for _ in 0..1000 {
            let w = random_word(sys, rng.gen_range(1..=10), &mut rng);
            let c = w.weights(sys).ratio.value();
            if (geom.interval(&w).len - c).abs() > 1e-12 * c {
                bad_len += 1;
            }
            if geom.separation_ratio(&w) < t * (1.0 - 1e-9) {
                bad_sep += 1;
            }
        }
        let count = 100_000;
        let samples = sample_measure(&geom, sys, count, 1e-4, 99).unwrap();
        let mut worst_p = 1.0f64;
        for depth in 1..=3 {
            let chain = Antichain::cylinders(sys, depth, 1 << 12).unwrap();
            let mut observed: BTreeMap<Word, usize> = BTreeMap::new();
            for s in &samples {
                *observed.entry(s.word.prefix(depth)).or_default() += 1;
            }
            let stat: f64 = chain
                .entries()
                .iter()
                .map(|e| {
                    let expected = count as f64 * e.weights.measure(sys);
                    let o = *observed.get(&e.word).unwrap_or(&0) as f64;
                    (o - expected).powi(2) / expected
                })
                .sum();
            let dist = ChiSquared::new((chain.phi() - 1) as f64).unwrap();
            let p = 1.0 - dist.cdf(stat);
            worst_p = worst_p.min(p);
            if stat >= dist.inverse_cdf(0.999) {
                pass = false;
            }
        }
        pass &= bad_len == 0 && bad_sep == 0;
        details.push(format!(
            "{name}: {bad_len} length and {bad_sep} separation failures, min chi-square p = {worst_p:.3}"
        ));
    }
    within_time(Duration::from_secs(60), start, outcome(pass, details.join("; ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("example two regression", example_two_regression),
        ("example one regression", example_one_regression),
        ("factor identity", factor_identity),
        ("antichain sum bounds", antichain_bounds),
        ("Q_k dichotomy", growth_dichotomy),
        ("empirical dimension", empirical_dimension),
        ("quantizer oracle", quantizer_oracle),
        ("geometry invariants", geometry_invariants),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
