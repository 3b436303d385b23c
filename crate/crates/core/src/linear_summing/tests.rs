use super::*;

fn l1(n: usize) -> FiniteSpace {
    FiniteSpace::l1(n)
}

fn tight() -> SummingConfig {
    let mut cfg = SummingConfig::default();
    cfg.sip.tol_gap = 1e-10;
    cfg
}

#[test]
fn phi_values() {
    let id = PhiMap::identity(l1(2));
    assert_eq!(phi_eval(&id, &[1.0, 0.0], &[1.0, -1.0]), 1.0);
    let s = PhiMap::sigma_interp(l1(2), 0.5).unwrap();
    assert!((phi_eval(&s, &[1.0, 1.0], &[1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
    let q = PhiMap::square_over_norm(l1(2));
    assert_eq!(phi_eval(&q, &[0.0, 0.0], &[1.0, 1.0]), 0.0);
    assert!(PhiMap::sigma_interp(l1(2), 1.0).is_err());
    assert!(PhiMap::anchored(l1(2), vec![2.0, 0.0]).is_err());
}

#[test]
fn phi_is_positively_homogeneous_and_bounded() {
    let base = FiniteSpace::l2(3);
    let phis = [
        PhiMap::identity(base.clone()),
        PhiMap::sigma_interp(base.clone(), 0.3).unwrap(),
        PhiMap::square_over_norm(base.clone()),
        PhiMap::anchored(base.clone(), vec![0.6, 0.0, 0.8]).unwrap(),
    ];
    let xs = sample_sphere(&base, 20, 1);
    let duals = sample_sphere(&base, 20, 2);
    for phi in &phis {
        for (x, s) in xs.iter().zip(&duals) {
            let v = phi.eval(x, s);
            assert!((phi.eval(&linalg::scaled(x, 3.7), s) - 3.7 * v).abs() < 1e-12);
            assert!(v <= phi.bound() * base.norm_of(x) + 1e-12);
        }
    }
}

#[test]
fn weak_norms() {
    let fam = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!((weak_p_norm(&fam, 1.0, &FiniteSpace::linf(2)).unwrap() - 1.0).abs() < 1e-15);
    let x = vec![0.3, -1.2];
    assert!((weak_p_norm(&[x.clone()], 2.0, &l1(2)).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(weak_p_norm(&[], 1.0, &l1(2)).unwrap(), 0.0);
}

#[test]
fn family_bounds() {
    let zero = LinearMap::zero(l1(2), l1(2));
    let id_phi = PhiMap::identity(l1(2));
    assert_eq!(family_lower_bound(&zero, &id_phi, 1.0, &[vec![1.0, 0.0]]).unwrap(), 0.0);

    // Rank-one T(x) = <x, a*> y with a norming family.
    let dom = l1(3);
    let cod = FiniteSpace::linf(2);
    let astar = vec![0.5, -2.0, 1.0];
    let y = vec![1.5, -0.5];
    let t = LinearMap::rank_one(dom.clone(), cod.clone(), &astar, &y).unwrap();
    let phi = PhiMap::identity(dom.clone());
    let x = vec![0.0, -1.0, 0.0]; // attains ||a*||_inf = 2 on the l1 ball
    let expected = dom.dual_norm(&astar).unwrap() * cod.norm(&y).unwrap();
    assert!((family_lower_bound(&t, &phi, 1.0, &[x]).unwrap() - expected).abs() < 1e-12);

    let id = LinearMap::identity(l1(2));
    let lb = family_lower_bound(&id, &id_phi, 1.0, &[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    assert!((lb - 2.0).abs() < 1e-12);
}

#[test]
fn rank_one_constant_is_attained_by_a_delta() {
    let dom = l1(3);
    let cod = FiniteSpace::linf(2);
    let astar = vec![0.5, -2.0, 1.0];
    let y = vec![1.5, -0.5];
    let t = LinearMap::rank_one(dom.clone(), cod.clone(), &astar, &y).unwrap();
    let expected = 2.0 * 1.5;
    for (r, tol) in [(1.0, 1e-8), (2.0, 1e-8), (3.0, 1e-8), (1.5, 1e-6)] {
        let rep = summing_constant(&t, &PhiMap::identity(dom.clone()), r, &tight()).unwrap();
        assert!((rep.upper_bound - expected).abs() < tol, "r={r}: {rep:?}");
        assert!((rep.lower_bound - expected).abs() < 1e-8, "r={r}: {rep:?}");
    }
}

#[test]
fn identity_on_l1_plane() {
    let id = LinearMap::identity(l1(2));
    let rep = summing_constant(&id, &PhiMap::identity(l1(2)), 1.0, &SummingConfig::default()).unwrap();
    assert!((rep.upper_bound - 2.0).abs() < 1e-9 && (rep.lower_bound - 2.0).abs() < 1e-9, "{rep:?}");
    assert!(rep.certified(1e-6));
    // The two sign functionals, half each.
    assert_eq!(rep.measure.support.len(), 2);
    for w in &rep.measure.weights {
        assert!((w - 0.5).abs() < 1e-9);
    }
    let zero = LinearMap::zero(l1(2), l1(2));
    let rep = summing_constant(&zero, &PhiMap::identity(l1(2)), 1.0, &SummingConfig::default()).unwrap();
    assert_eq!((rep.upper_bound, rep.lower_bound), (0.0, 0.0));
    assert_eq!(rep.measure.weights, vec![1.0]);
}

#[test]
fn domination_checks() {
    let dom = l1(2);
    let astar = vec![1.0, -0.5];
    let y = vec![2.0, 1.0];
    let t = LinearMap::rank_one(dom.clone(), FiniteSpace::l2(2), &astar, &y).unwrap();
    let phi = PhiMap::identity(dom.clone());
    let mu = DiscreteMeasure::delta(astar.clone());
    let c = 5f64.sqrt();
    let samples = sample_sphere(&dom, 100, 3);
    assert!(check_domination(&t, &phi, 1.0, &mu, c, &samples, TOL_CHECK).unwrap().pass);
    let broken = check_domination(&t, &phi, 1.0, &mu, c / 2.0, &samples, TOL_CHECK).unwrap();
    assert!(!broken.pass && broken.max_residual > 0.0);
    let zero = LinearMap::zero(dom.clone(), dom.clone());
    let rep = check_domination(&zero, &phi, 1.0, &mu, 0.0, &samples, TOL_CHECK).unwrap();
    assert_eq!(rep.max_residual, 0.0);
}

#[test]
fn anchored_mixing() {
    let dom = l1(2);
    let x0 = vec![1.0, -0.25];
    let t = LinearMap::rank_one(dom.clone(), FiniteSpace::linf(2), &x0, &[0.5, -1.5]).unwrap();
    let phi = PhiMap::anchored(dom.clone(), x0.clone()).unwrap();
    let rep = summing_constant(&t, &phi, 1.0, &tight()).unwrap();
    assert!((rep.upper_bound - 1.5).abs() < 1e-8, "{rep:?}");
    let samples = sample_sphere(&dom, 100, 4);
    let mix = example3_mixing_check(&t, &x0, &rep.measure, rep.upper_bound, &samples, 1e-10).unwrap();
    assert!(mix.pass, "{mix:?}");
    let zero = LinearMap::zero(dom.clone(), dom.clone());
    assert!(example3_mixing_check(&zero, &x0, &rep.measure, 0.0, &samples, 1e-10).unwrap().pass);
    // Off the anchor's kernel nothing can dominate.
    let generic = LinearMap::identity(dom.clone());
    assert!(matches!(
        summing_constant(&generic, &phi, 1.0, &SummingConfig::default()),
        Err(Error::ClassViolated { .. })
    ));
}

#[test]
fn sigma_zero_matches_identity_and_scaling_is_linear() {
    let dom = l1(3);
    let cod = FiniteSpace::linf(3);
    let t = LinearMap::new(dom.clone(), cod, vec![1.0, -0.5, 0.2, 0.3, 0.9, -1.1, 0.0, 0.4, 0.7]).unwrap();
    let cfg = SummingConfig::default();
    for r in [1.0, 2.0] {
        let a = summing_constant(&t, &PhiMap::identity(dom.clone()), r, &cfg).unwrap();
        let b = summing_constant(&t, &PhiMap::sigma_interp(dom.clone(), 0.0).unwrap(), r, &cfg).unwrap();
        assert!((a.upper_bound - b.upper_bound).abs() < 1e-9);
        let c = summing_constant(&t.scaled(-2.5), &PhiMap::identity(dom.clone()), r, &cfg).unwrap();
        assert!((c.upper_bound - 2.5 * a.upper_bound).abs() < 1e-8 * a.upper_bound);
        assert!((c.lower_bound - 2.5 * a.lower_bound).abs() < 1e-8 * a.upper_bound);
        let floor = t.op_norm(crate::operators::OpNormMode::Exact).unwrap();
        assert!(a.upper_bound >= floor - 1e-9);
    }
}

#[test]
fn square_over_norm_dominates_identity() {
    let dom = l1(2);
    let t = LinearMap::new(dom.clone(), FiniteSpace::linf(2), vec![1.0, 0.4, -0.3, 0.8]).unwrap();
    let cfg = SummingConfig::default();
    let id = summing_constant(&t, &PhiMap::identity(dom.clone()), 1.0, &cfg).unwrap();
    let sq = summing_constant(&t, &PhiMap::square_over_norm(dom.clone()), 1.0, &cfg).unwrap();
    assert!(sq.certified(1e-6), "{sq:?}");
    assert!(id.upper_bound <= sq.upper_bound + 1e-8);
}

#[test]
fn euclidean_identity_two_summing_norm_is_bracketed() {
    let sp = FiniteSpace::l2(2);
    let id = LinearMap::identity(sp.clone());
    let rep = summing_constant(&id, &PhiMap::identity(sp), 2.0, &SummingConfig::default()).unwrap();
    assert!(rep.lower_bound <= 2f64.sqrt() + 1e-9 && rep.upper_bound >= 2f64.sqrt() - 1e-9, "{rep:?}");
    assert!(rep.upper_bound - rep.lower_bound < 0.02);
}
