//! Shared fixtures for the integration tests.

#![allow(dead_code)]

use contraction_sos::sdp::{SdpProblem, Var};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Row terms for `⟨A, X_block⟩`.
fn inner_terms(block: usize, a: &DMatrix<f64>) -> Vec<(Var, f64)> {
    let mut t = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..=i {
            let c = if i == j { a[(i, i)] } else { 2.0 * a[(i, j)] };
            t.push((SdpProblem::block_var(block, i, j), c));
        }
    }
    t
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

pub struct Instance {
    pub prob: SdpProblem,
    pub feasible: bool,
    /// Planted infeasibility ray.
    pub ray: Option<Vec<f64>>,
}

pub fn feasible_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims: Vec<usize> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..=5)).collect();
    let n_free = rng.gen_range(0..=2);
    let unknowns: usize = dims.iter().map(|d| d * (d + 1) / 2).sum::<usize>() + n_free;
    let m = rng.gen_range(2..=8).min(unknowns);
    let x0: Vec<DMatrix<f64>> = dims.iter().map(|&d| random_pd(&mut rng, d)).collect();
    let s0: Vec<DMatrix<f64>> = dims.iter().map(|&d| random_pd(&mut rng, d)).collect();
    let free0: Vec<f64> = (0..n_free).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut prob = SdpProblem::new(dims.clone(), n_free);
    let mut c_blocks: Vec<DMatrix<f64>> = s0.clone();
    let mut c_free = vec![0.0; n_free];
    for &yi in &y0 {
        let mut terms = Vec::new();
        let mut b = 0.0;
        for (k, &d) in dims.iter().enumerate() {
            let a = random_sym(&mut rng, d);
            b += inner(&a, &x0[k]);
            c_blocks[k] += &a * yi;
            terms.extend(inner_terms(k, &a));
        }
        for (j, cf) in c_free.iter_mut().enumerate() {
            let f = rng.gen_range(-1.0..1.0);
            b += f * free0[j];
            *cf += f * yi;
            terms.push((Var::Free(j), f));
        }
        prob.add_row(terms, b);
    }
    let mut obj = Vec::new();
    for (k, c) in c_blocks.iter().enumerate() {
        obj.extend(inner_terms(k, c));
    }
    for (j, &cf) in c_free.iter().enumerate() {
        obj.push((Var::Free(j), cf));
    }
    prob.objective = obj;
    Instance {
        prob,
        feasible: true,
        ray: None,
    }
}

pub fn infeasible_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=4)).collect();
    // keep the rows independent: no more rows than block unknowns
    let unknowns: usize = dims.iter().map(|d| d * (d + 1) / 2).sum();
    let m = rng.gen_range(2..=6).min(unknowns);
    let y: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut prob = SdpProblem::new(dims.clone(), 0);
    let mut acc: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
    let mut by = 0.0;
    for &yi in &y {
        let mut terms = Vec::new();
        for (k, &d) in dims.iter().enumerate() {
            let a = random_sym(&mut rng, d);
            acc[k] += &a * yi;
            terms.extend(inner_terms(k, &a));
        }
        let b = rng.gen_range(-1.0..1.0);
        by += b * yi;
        prob.add_row(terms, b);
    }
    // Last row (multiplier 1) makes Σ yᵢAᵢ = -P ⪯ 0 and bᵀy = 1.
    let mut terms = Vec::new();
    for (k, &d) in dims.iter().enumerate() {
        let p = random_pd(&mut rng, d);
        let a = -(p + &acc[k]);
        terms.extend(inner_terms(k, &a));
    }
    prob.add_row(terms, 1.0 - by);
    let mut ray = y;
    ray.push(1.0);
    Instance {
        prob,
        feasible: false,
        ray: Some(ray),
    }
}

pub fn regression_set() -> Vec<Instance> {
    (0..14)
        .map(|s| feasible_instance(1000 + s))
        .chain((0..6).map(|s| infeasible_instance(2000 + s)))
        .collect()
}
