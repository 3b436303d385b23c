//! Measure programs whose inputs are tuples `(x^1, .., x^m)` on a product of
//! unit spheres, with a seeded multistart separation oracle.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{Denominator, SemiInfiniteProgram, Separation};
use crate::linalg;
use crate::optimize::{self, CompassOptions};
use crate::spaces::FiniteSpace;

pub(crate) type Tuple = Vec<Vec<f64>>;

/// Largest product of per-factor candidate sets evaluated in full.
const PRODUCT_BUDGET: usize = 4096;

/// Search effort for [`maximize_over_spheres`].
#[derive(Debug, Clone, Copy)]
pub(crate) struct TupleSearch {
    pub restarts: usize,
    pub top_k: usize,
    pub seed: u64,
}

fn factor_candidates(f: &FiniteSpace) -> Vec<Vec<f64>> {
    let res = if f.dim() <= 2 { 16 } else { 2 };
    let mut pts: Vec<Vec<f64>> = f.primal_vertices().map(|v| v.to_vec()).unwrap_or_default();
    pts.extend(f.primal_sphere_points(res));
    let mut seen = std::collections::HashSet::new();
    pts.retain(|p| {
        let neg = linalg::round_key(&linalg::scaled(p, -1.0));
        !seen.contains(&neg) && seen.insert(linalg::round_key(p))
    });
    pts
}

fn project_tuple(factors: &[FiniteSpace], flat: &mut [f64]) {
    let mut off = 0;
    for f in factors {
        let block = &mut flat[off..off + f.dim()];
        let n = f.norm_of(block);
        if n > 0.0 {
            block.iter_mut().for_each(|v| *v /= n);
        }
        off += f.dim();
    }
}

pub(crate) fn split(factors: &[FiniteSpace], flat: &[f64]) -> Tuple {
    let mut out = Vec::with_capacity(factors.len());
    let mut off = 0;
    for f in factors {
        out.push(flat[off..off + f.dim()].to_vec());
        off += f.dim();
    }
    out
}

/// Maximizes `f` over the product of unit spheres. Returns refined tuples,
/// best first.
pub(crate) fn maximize_over_spheres(
    factors: &[FiniteSpace],
    f: &(dyn Fn(&[Vec<f64>]) -> f64 + Sync),
    extra: &[Tuple],
    search: TupleSearch,
) -> Vec<(Tuple, f64)> {
    let total: usize = factors.iter().map(|f| f.dim()).sum();
    let sets: Vec<Vec<Vec<f64>>> = factors.iter().map(factor_candidates).collect();
    let size: usize = sets.iter().map(|s| s.len()).product();
    let mut rng = optimize::rng(search.seed);
    let mut cands: Vec<Vec<f64>> = extra.iter().map(|t| t.concat()).collect();
    if size <= PRODUCT_BUDGET {
        cands.extend(crate::operators::cartesian(&sets).into_iter().map(|t| t.concat()));
    } else {
        use rand::Rng;
        for _ in 0..PRODUCT_BUDGET {
            cands.push(sets.iter().flat_map(|s| s[rng.gen_range(0..s.len())].clone()).collect());
        }
    }
    for _ in 0..search.restarts {
        cands.push(optimize::random_vector(&mut rng, total));
    }
    for c in cands.iter_mut() {
        project_tuple(factors, c);
    }
    let g = |flat: &[f64]| f(&split(factors, flat));
    let project = |y: &mut Vec<f64>| project_tuple(factors, y);
    optimize::multistart_maximize(
        cands,
        &g,
        &project,
        search.top_k,
        CompassOptions { initial_step: 0.1, min_step: 1e-11, max_evals: 6000 },
    )
    .into_iter()
    .map(|(x, v)| (split(factors, &x), v))
    .collect()
}

type Lhs<'a> = Box<dyn Fn(&[Vec<f64>]) -> f64 + Sync + 'a>;
type Integrands<'a> = Box<dyn Fn(&[Vec<f64>]) -> Vec<f64> + Sync + 'a>;
type FamilyDen<'a> = Box<dyn Fn(&[Tuple]) -> Denominator + Sync + 'a>;

/// `lhs(x)^r <= Σ_j ν_j g_j(x)^r` over tuples of unit vectors. `lhs` and every
/// `g_j` must be homogeneous of degree one in factor `scale_index`.
pub(crate) struct TupleProgram<'a> {
    pub factors: Vec<FiniteSpace>,
    pub r: f64,
    pub support_len: usize,
    pub scale_index: usize,
    pub lhs: Lhs<'a>,
    pub integrands: Integrands<'a>,
    pub family_den: FamilyDen<'a>,
    /// Magnitude of `lhs` on unit tuples, for the rounding floor.
    pub lhs_scale: f64,
    pub search: TupleSearch,
    pub calls: AtomicU64,
}

impl TupleProgram<'_> {
    fn ratio(&self, nu: &[f64], x: &[Vec<f64>]) -> f64 {
        let l = (self.lhs)(x);
        if l <= 1e-7 * self.lhs_scale {
            return 0.0;
        }
        let den: f64 = (self.integrands)(x).iter().zip(nu).filter(|(_, w)| **w > 0.0).map(|(g, w)| w * g.powf(self.r)).sum();
        if den <= 0.0 {
            f64::INFINITY
        } else {
            l.powf(self.r) / den
        }
    }
}

impl SemiInfiniteProgram for TupleProgram<'_> {
    type Point = Tuple;

    fn exponent(&self) -> f64 {
        self.r
    }

    fn support_len(&self) -> usize {
        self.support_len
    }

    fn lhs(&self, x: &Tuple) -> f64 {
        (self.lhs)(x)
    }

    fn integrands(&self, x: &Tuple) -> Vec<f64> {
        (self.integrands)(x)
    }

    fn scale(&self, x: &Tuple, t: f64) -> Tuple {
        let mut y = x.clone();
        y[self.scale_index] = linalg::scaled(&y[self.scale_index], t);
        y
    }

    fn initial_points(&self) -> Vec<Tuple> {
        let sets: Vec<Vec<Vec<f64>>> = self
            .factors
            .iter()
            .map(|f| (0..f.dim()).map(|i| {
                let e = linalg::unit(f.dim(), i);
                linalg::scaled(&e, 1.0 / f.norm_of(&e))
            }).collect())
            .collect();
        let mut pts = crate::operators::cartesian(&sets);
        pts.truncate(64);
        pts
    }

    fn separate(&self, nu: &[f64], hints: &[Tuple]) -> Separation<Tuple> {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        let search = TupleSearch {
            seed: self.search.seed.wrapping_add(call.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            ..self.search
        };
        let f = |x: &[Vec<f64>]| self.ratio(nu, x);
        let found = maximize_over_spheres(&self.factors, &f, hints, search);
        let sup_ratio = found.first().map_or(0.0, |p| p.1).max(0.0);
        Separation { points: found, sup_ratio, exact: false }
    }

    fn family_denominator(&self, family: &[Tuple]) -> Denominator {
        (self.family_den)(family)
    }
}
