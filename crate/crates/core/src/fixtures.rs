//! Reference systems used by tests, the acceptance suite and the CLI demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{solve_sr, SpectralOptions};
use crate::system::{MarkovSystem, SystemSpec};

fn build(spec: SystemSpec) -> MarkovSystem {
    MarkovSystem::validate(&spec).unwrap_or_else(|e| panic!("fixture is invalid: {e}"))
}

/// Two vertices, complete graph, `p = 1/2`, `c = 1/3`, `χ = (1/2, 1/2)`.
pub fn homogeneous_spec(r: f64) -> SystemSpec {
    let c = 1.0 / 3.0;
    SystemSpec {
        order_r: r,
        transition: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        ratios: vec![vec![c, c], vec![c, c]],
        initial: vec![0.5, 0.5],
        separation_t: None,
    }
}

pub fn homogeneous() -> MarkovSystem {
    build(homogeneous_spec(1.0))
}

/// Two chained components `{1,2} ≺ {3,4}` sharing `s_r = r/(2r+1)`.
///
/// Ratios inside `{1,2}` are `1/4`, so that `p c^r = 2^{-(2+2r)}` on those
/// edges; the edges into vertex 3 use `1/8` and the block `{3,4}` uses
/// `2^{-(2r+1)/r}`. Initial distribution uniform.
pub fn example_two_spec(r: f64) -> SystemSpec {
    let s = r / (2.0 * r + 1.0);
    let c2 = 2f64.powf(-1.0 / s);
    SystemSpec {
        order_r: r,
        transition: vec![
            vec![0.25, 0.25, 0.5, 0.0],
            vec![0.25, 0.25, 0.5, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ],
        ratios: vec![
            vec![0.25, 0.25, 0.125, 0.0],
            vec![0.25, 0.25, 0.125, 0.0],
            vec![0.0, 0.0, c2, c2],
            vec![0.0, 0.0, c2, c2],
        ],
        initial: vec![0.25; 4],
        separation_t: None,
    }
}

pub fn example_two(r: f64) -> MarkovSystem {
    build(example_two_spec(r))
}

fn random_stochastic_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(1.0..2.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Block-diagonal system with a positive 2×2 block on `{1,2}` and a positive
/// 3×3 block on `{3,4,5}`. The 3×3 ratios are a random profile scaled by a
/// single factor, tuned by bisection so both blocks share the same `s_r(H)`.
pub fn example_one_spec(seed: u64, r: f64) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<Vec<f64>> = (0..2).map(|_| random_stochastic_row(&mut rng, 2)).collect();
    let t: Vec<Vec<f64>> = (0..3).map(|_| random_stochastic_row(&mut rng, 3)).collect();
    let cq: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..2).map(|_| rng.gen_range(0.18..0.26)).collect())
        .collect();
    let profile: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3).map(|_| rng.gen_range(0.7..1.0)).collect())
        .collect();

    let assemble = |scale: f64| -> SystemSpec {
        let mut transition = vec![vec![0.0; 5]; 5];
        let mut ratios = vec![vec![0.0; 5]; 5];
        for i in 0..2 {
            for j in 0..2 {
                transition[i][j] = q[i][j];
                ratios[i][j] = cq[i][j];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                transition[i + 2][j + 2] = t[i][j];
                ratios[i + 2][j + 2] = profile[i][j] * scale;
            }
        }
        SystemSpec {
            order_r: r,
            transition,
            ratios,
            initial: vec![0.2; 5],
            separation_t: None,
        }
    };

    let opts = SpectralOptions::default();
    let block_root = |spec: &SystemSpec, block: &[usize]| {
        solve_sr(&build(spec.clone()), Some(block), &opts).expect("positive block has a root")
    };
    let target = block_root(&assemble(0.5), &[0, 1]);
    let (mut lo, mut hi) = (1e-6, 0.999);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if block_root(&assemble(mid), &[2, 3, 4]) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assemble(0.5 * (lo + hi))
}

pub fn example_one(seed: u64, r: f64) -> MarkovSystem {
    build(example_one_spec(seed, r))
}

/// Example-one variant with the 3×3 ratios shrunk by `factor < 1`, so the
/// 3×3 block drops out of the class M.
pub fn example_one_perturbed(seed: u64, r: f64, factor: f64) -> MarkovSystem {
    let mut spec = example_one_spec(seed, r);
    for row in &mut spec.ratios[2..] {
        for c in row.iter_mut() {
            *c *= factor;
        }
    }
    build(spec)
}

/// Every row equal to `q`, every ratio row equal to `c`: the self-similar case.
pub fn identical_rows(q: &[f64], c: &[f64], r: f64) -> MarkovSystem {
    let n = q.len();
    build(SystemSpec {
        order_r: r,
        transition: vec![q.to_vec(); n],
        ratios: vec![c.to_vec(); n],
        initial: vec![1.0 / n as f64; n],
        separation_t: None,
    })
}

/// Vertex 1 feeds the strongly connected pair `{2,3}` and is on no cycle.
pub fn with_trivial_vertex() -> MarkovSystem {
    build(SystemSpec {
        order_r: 1.0,
        transition: vec![vec![0.0, 0.5, 0.5], vec![0.0, 0.3, 0.7], vec![0.0, 0.6, 0.4]],
        ratios: vec![vec![0.0, 0.3, 0.2], vec![0.0, 0.25, 0.3], vec![0.0, 0.2, 0.35]],
        initial: vec![0.2, 0.4, 0.4],
        separation_t: None,
    })
}

fn fill_weights(rng: &mut ChaCha8Rng, succ: &[Vec<usize>], c_range: (f64, f64), r: f64) -> SystemSpec {
    let n = succ.len();
    let mut transition = vec![vec![0.0; n]; n];
    let mut ratios = vec![vec![0.0; n]; n];
    for (i, outs) in succ.iter().enumerate() {
        let row = random_stochastic_row(rng, outs.len());
        for (&j, p) in outs.iter().zip(row) {
            transition[i][j] = p;
            ratios[i][j] = rng.gen_range(c_range.0..c_range.1);
        }
    }
    let chi = random_stochastic_row(rng, n);
    SystemSpec {
        order_r: r,
        transition,
        ratios,
        initial: chi,
        separation_t: None,
    }
}

/// Random system on `n` vertices, usually reducible: vertices get random
/// levels and edges never go to a lower level.
pub fn random_system(seed: u64, n: usize) -> MarkovSystem {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    level[idx[0]] = 3;
    level[idx[1]] = 3;
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut allowed: Vec<usize> = (0..n).filter(|&j| level[j] >= level[i]).collect();
            allowed.shuffle(&mut rng);
            let k = rng.gen_range(2..=allowed.len());
            let mut outs = allowed[..k].to_vec();
            outs.sort_unstable();
            outs
        })
        .collect();
    let r = rng.gen_range(0.5..3.0);
    build(fill_weights(&mut rng, &succ, (0.05, 0.6), r))
}

/// Random strongly connected system: a Hamiltonian cycle plus one extra
/// edge per vertex.
pub fn random_irreducible(seed: u64, n: usize) -> MarkovSystem {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let next = (i + 1) % n;
            let mut extra = rng.gen_range(0..n);
            while extra == next {
                extra = rng.gen_range(0..n);
            }
            let mut outs = vec![next, extra];
            if rng.gen_bool(0.3) {
                outs.push(rng.gen_range(0..n));
            }
            outs.sort_unstable();
            outs.dedup();
            outs
        })
        .collect();
    let r = rng.gen_range(0.5..2.5);
    build(fill_weights(&mut rng, &succ, (0.1, 0.45), r))
}
