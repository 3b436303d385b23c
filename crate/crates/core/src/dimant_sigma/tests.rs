use super::*;
use crate::operators::FormsConfig;

fn l1() -> FiniteSpace {
    FiniteSpace::l1(2)
}

fn bilinear(coeffs: Vec<f64>) -> MultilinearMap {
    MultilinearMap::new(vec![l1(), l1()], FiniteSpace::linf(2), coeffs).unwrap()
}

fn rank_one(u: &[f64]) -> MultilinearMap {
    MultilinearMap::from_form(vec![l1(), l1()], FiniteSpace::linf(2), &[1.0, 0.0, 0.0, 0.0], u).unwrap()
}

fn random_bilinear(seed: u64) -> MultilinearMap {
    let mut rng = crate::optimize::rng(seed);
    bilinear(crate::optimize::random_vector(&mut rng, 8))
}

fn forms() -> FormsBall {
    crate::operators::TensorSpace::new(vec![l1(), l1()]).unwrap().forms_ball(&FormsConfig::default()).unwrap()
}

#[test]
fn delta_collapses_at_sigma_zero() {
    let fam = PlainFamily::new(
        &[l1(), l1()],
        vec![vec![vec![0.3, -0.7], vec![1.0, 0.2]], vec![vec![-0.5, 0.5], vec![0.1, 0.9]]],
    )
    .unwrap();
    let f = forms();
    for p in [1.0, 2.0] {
        let d = delta_p_sigma(&[l1(), l1()], &fam, p, 0.0, &f).unwrap();
        assert_eq!(d, strongly_denominator(&[l1(), l1()], &fam, p, &f));
    }
}

#[test]
fn delta_of_a_single_row_beats_every_rank_one_sign_form() {
    let x = vec![0.6, -0.4];
    let y = vec![-0.25, 0.75];
    let fam = PlainFamily::new(&[l1(), l1()], vec![vec![x.clone(), y.clone()]]).unwrap();
    let sigma = 0.5;
    let d = delta_p_sigma(&[l1(), l1()], &fam, 1.0, sigma, &forms()).unwrap();
    let signs = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
    let mut best: f64 = 0.0;
    for a in &signs {
        for b in &signs {
            let phi = (a[0] * x[0] + a[1] * x[1]) * (b[0] * y[0] + b[1] * y[1]);
            best = best.max(phi.abs().powf(1.0 - sigma));
        }
    }
    assert!(d >= best - 1e-15, "{d} < {best}");
    let zero = PlainFamily::new(&[l1(), l1()], vec![vec![vec![0.0, 0.0], vec![0.0, 0.0]]]).unwrap();
    assert_eq!(delta_p_sigma(&[l1(), l1()], &zero, 1.0, sigma, &forms()).unwrap(), 0.0);
}

#[test]
fn delta_dominates_on_random_families() {
    let mut rng = crate::optimize::rng(11);
    let f = forms();
    for n in 1..30 {
        let rows: Vec<Tuple> = (0..n % 5 + 1)
            .map(|_| vec![crate::optimize::random_vector(&mut rng, 2), crate::optimize::random_vector(&mut rng, 2)])
            .collect();
        let fam = PlainFamily::new(&[l1(), l1()], rows).unwrap();
        delta_p_sigma(&[l1(), l1()], &fam, 1.0 + (n % 3) as f64, 0.3, &f).unwrap();
    }
}

#[test]
fn order_one_is_the_sigma_interpolated_constant() {
    let t = MultilinearMap::new(vec![l1()], FiniteSpace::linf(2), vec![1.0, -0.5, 0.25, 0.8]).unwrap();
    let cfg = MultilinearConfig::default();
    let rep = dimant_constant(&t, 1.0, 0.5, &cfg).unwrap();
    let lt = LinearMap::new(l1(), FiniteSpace::linf(2), vec![1.0, -0.5, 0.25, 0.8]).unwrap();
    let lin = summing_constant(&lt, &PhiMap::sigma_interp(l1(), 0.5).unwrap(), 2.0, &cfg.summing).unwrap();
    assert_eq!(rep.r, 2.0);
    assert!((rep.upper_bound - lin.upper_bound).abs() < 1e-12);
}

#[test]
fn rank_one_bilinear_constants() {
    let u = [0.5, -2.0];
    let t = rank_one(&u);
    let cfg = MultilinearConfig::default();
    for sigma in [0.0, 0.25, 0.5] {
        let d = dimant_constant(&t, 1.0, sigma, &cfg).unwrap();
        assert!((d.upper_bound - 2.0).abs() < 2e-6 && (d.lower_bound - 2.0).abs() < 2e-6, "{d:?}");
        let f = factorable_constant(&t, 1.0, sigma, &cfg).unwrap();
        assert!((f.upper_bound - 2.0).abs() < 2e-6 && (f.lower_bound - 2.0).abs() < 2e-6, "{f:?}");
    }
    let fam = PlainFamily::new(&[l1(), l1()], vec![vec![vec![1.0, 0.0], vec![1.0, 0.0]]]).unwrap();
    let b = dimant_family_lower_bound(&t, 1.0, 0.5, &fam, &cfg).unwrap();
    assert!((b.value - 2.0).abs() < 1e-12 && b.certified);
}

#[test]
fn zero_map() {
    let z = MultilinearMap::zero(vec![l1(), l1()], FiniteSpace::linf(2));
    let cfg = MultilinearConfig::default();
    assert_eq!(dimant_constant(&z, 1.0, 0.5, &cfg).unwrap().upper_bound, 0.0);
    let f = factorable_constant(&z, 1.0, 0.5, &cfg).unwrap();
    assert_eq!(f.upper_bound, 0.0);
    let rec = final_factorization(&z, &f, &cfg, 20, 1).unwrap();
    assert_eq!(rec, FinalFactorizationRecord { inequality_residual: 0.0, domination_residual: 0.0, diagram_residual: 0.0, gap: 0.0 });
    assert!(sigma_monotonicity_check(&z, 1.0, 2.0, 1.0 / 3.0, &cfg, 0.0).unwrap().pass);
    assert!(inclusion_check(&z, 1.0, 0.5, &cfg, 0.0).unwrap().pass);
}

#[test]
fn orderings_on_random_bilinear_maps() {
    let cfg = MultilinearConfig::default();
    for seed in 0..3 {
        let t = random_bilinear(100 + seed);
        let mono = sigma_monotonicity_check(&t, 1.0, 2.0, 1.0 / 3.0, &cfg, 1e-6).unwrap();
        assert!(mono.pass, "seed {seed}: {mono:?}");
        let inc = inclusion_check(&t, 1.0, 0.5, &cfg, 1e-6).unwrap();
        assert!(inc.pass, "seed {seed}: {inc:?}");
        let d = dimant_constant(&t, 1.0, 0.5, &cfg).unwrap();
        let f = factorable_constant(&t, 1.0, 0.5, &cfg).unwrap();
        assert!(d.lower_bound <= f.lower_bound + 1e-9, "{d:?} {f:?}");
        assert!(f.lower_bound <= f.upper_bound + 1e-9);
        assert!(d.upper_bound <= f.upper_bound + 1e-6, "{d:?} {f:?}");
    }
}

#[test]
fn final_factorization_records() {
    let cfg = MultilinearConfig::default();
    let t = rank_one(&[1.0, 0.5]);
    let rep = factorable_constant(&t, 1.0, 0.5, &cfg).unwrap();
    let rec = final_factorization(&t, &rep, &cfg, 100, 2).unwrap();
    assert!(rec.pass(1e-9), "{rec:?}");
    let diag = bilinear(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let rep = factorable_constant(&diag, 1.0, 0.25, &cfg).unwrap();
    let rec = final_factorization(&diag, &rep, &cfg, 100, 3).unwrap();
    assert!(rec.pass(1e-8) && rec.gap <= 1e-4, "{rec:?}");
    let mut open = rep.clone();
    open.gap = 1.0;
    assert!(matches!(final_factorization(&diag, &open, &cfg, 10, 3), Err(Error::Uncertified(_))));
}

#[test]
fn invalid_parameters() {
    assert!(sigma_exponent(0.5, 0.0).is_err());
    assert!(sigma_exponent(1.0, 1.0).is_err());
    assert_eq!(sigma_exponent(1.0, 0.5).unwrap(), 2.0);
}
