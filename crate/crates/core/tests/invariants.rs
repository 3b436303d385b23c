use proptest::prelude::*;
use summing_core::{
    delta_p_sigma, dimant_constant, min_measure_mass, projective_norm, summing_constant, FiniteSpace, FormsConfig,
    LinearMap, MultilinearConfig, MultilinearMap, PhiMap, PlainFamily, SummingConfig, TensorElement, TensorSpace,
};

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

fn nonzero(v: &[f64]) -> bool {
    v.iter().any(|x| x.abs() > 1e-3)
}

fn phis(base: &FiniteSpace) -> Vec<PhiMap> {
    vec![
        PhiMap::identity(base.clone()),
        PhiMap::sigma_interp(base.clone(), 0.4).unwrap(),
        PhiMap::square_over_norm(base.clone()),
        PhiMap::anchored(base.clone(), vec![1.0, 0.5]).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phi_is_positively_homogeneous(x in coeffs(2), xs in coeffs(2), lambda in -3.0..3.0f64) {
        let base = FiniteSpace::l1(2);
        for phi in phis(&base) {
            let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            let lhs = phi.eval(&scaled, &xs);
            let rhs = lambda.abs() * phi.eval(&x, &xs);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{:?}: {lhs} vs {rhs}", phi.kind);
        }
    }

    #[test]
    fn summing_bounds_are_ordered_and_homogeneous(m in coeffs(4), lambda in 0.1..4.0f64) {
        prop_assume!(nonzero(&m));
        let t = LinearMap::new(FiniteSpace::l1(2), FiniteSpace::linf(2), m).unwrap();
        let cfg = SummingConfig::default();
        for r in [1.0, 2.0] {
            let phi = PhiMap::identity(t.domain.clone());
            let a = summing_constant(&t, &phi, r, &cfg).unwrap();
            prop_assert!(a.lower_bound <= a.upper_bound + cfg.sip.tol_duality * a.upper_bound.max(1.0));
            let b = summing_constant(&t.scaled(lambda), &phi, r, &cfg).unwrap();
            prop_assert!((b.upper_bound - lambda * a.upper_bound).abs() <= 1e-6 * (1.0 + b.upper_bound));
            // The operator norm never exceeds the summing constant.
            let norm = t.op_norm(summing_core::OpNormMode::Exact).unwrap();
            prop_assert!(norm <= a.upper_bound + 1e-9);
        }
    }

    #[test]
    fn measure_lp_dominates_every_row(g in prop::collection::vec(coeffs(3), 1..6), h in coeffs(5)) {
        let g: Vec<Vec<f64>> = g.into_iter().map(|row| row.into_iter().map(|v| v.abs() + 0.01).collect()).collect();
        let h: Vec<f64> = h.iter().take(g.len()).map(|v| v.abs()).chain(std::iter::repeat(0.5)).take(g.len()).collect();
        let lp = min_measure_mass(&g, &h, 3).unwrap();
        for (row, hi) in g.iter().zip(&h) {
            let covered: f64 = row.iter().zip(&lp.nu).map(|(a, b)| a * b).sum();
            prop_assert!(covered >= hi * (1.0 - 1e-9) - 1e-12);
        }
        // Strong duality between the measure and the row multipliers.
        let primal: f64 = lp.row_weights.iter().zip(&h).map(|(w, hi)| w * hi).sum();
        prop_assert!((primal - lp.mass).abs() <= 1e-9 * (1.0 + lp.mass));
    }

    #[test]
    fn delta_dominates_the_strongly_denominator(
        rows in prop::collection::vec((coeffs(2), coeffs(2)), 1..5),
        sigma in 0.0..0.9f64,
        p in 1.0..3.0f64,
    ) {
        let factors = vec![FiniteSpace::l1(2), FiniteSpace::linf(2)];
        let forms = TensorSpace::new(factors.clone()).unwrap().forms_ball(&FormsConfig::default()).unwrap();
        let fam = PlainFamily::new(&factors, rows.into_iter().map(|(a, b)| vec![a, b]).collect()).unwrap();
        let delta = delta_p_sigma(&factors, &fam, p, sigma, &forms).unwrap();
        let strongly = summing_core::dimant_sigma::strongly_denominator(&factors, &fam, p / (1.0 - sigma), &forms);
        prop_assert!(strongly <= delta);
    }

    #[test]
    fn projective_bounds_bracket(v in coeffs(4)) {
        let space = TensorSpace::new(vec![FiniteSpace::l1(2), FiniteSpace::l2(2)]).unwrap();
        let pn = projective_norm(&TensorElement::new(space, v).unwrap(), 4).unwrap();
        prop_assert!(pn.lower <= pn.upper + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dimant_bounds_scale_with_the_map(c in coeffs(8), lambda in 0.2..3.0f64) {
        prop_assume!(nonzero(&c));
        let t = MultilinearMap::new(vec![FiniteSpace::l1(2), FiniteSpace::l1(2)], FiniteSpace::linf(2), c).unwrap();
        let cfg = MultilinearConfig::default();
        let a = dimant_constant(&t, 1.0, 0.25, &cfg).unwrap();
        let b = dimant_constant(&t.scaled(lambda), 1.0, 0.25, &cfg).unwrap();
        prop_assert!(a.lower_bound <= a.upper_bound + 1e-6);
        // Lower bounds are certificates, so scaling one family bounds the other.
        prop_assert!(b.upper_bound + 1e-6 >= lambda * a.lower_bound);
        prop_assert!(lambda * a.upper_bound + 1e-6 >= b.lower_bound);
    }
}
