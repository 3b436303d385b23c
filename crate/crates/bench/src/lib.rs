//! Fixed inputs shared by the benchmarks.

use summing_core::{optimize, FiniteSpace, LinearMap, LpProblem, TensorElement, TensorSpace};

/// A feasible covering LP with `rows` constraints over `cols` variables.
pub fn covering_lp(rows: usize, cols: usize, seed: u64) -> LpProblem {
    let mut rng = optimize::rng(seed);
    let mut lp = LpProblem::new(vec![1.0; cols]);
    for _ in 0..rows {
        let a: Vec<f64> = optimize::random_vector(&mut rng, cols).iter().map(|v| v.abs() + 0.05).collect();
        lp = lp.row(a, 1.0);
    }
    lp
}

/// A random map `l_1^n -> l_inf^n`.
pub fn random_operator(n: usize, seed: u64) -> LinearMap {
    let mut rng = optimize::rng(seed);
    LinearMap::new(FiniteSpace::l1(n), FiniteSpace::linf(n), optimize::random_vector(&mut rng, n * n)).unwrap()
}

/// A random tensor in `l_1^n (x) l_2^n`.
pub fn random_tensor(n: usize, seed: u64) -> TensorElement {
    let mut rng = optimize::rng(seed);
    let space = TensorSpace::new(vec![FiniteSpace::l1(n), FiniteSpace::l2(n)]).unwrap();
    TensorElement::new(space, optimize::random_vector(&mut rng, n * n)).unwrap()
}
