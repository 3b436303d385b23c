use super::*;
use crate::spaces::FiniteSpace;

fn l1() -> FiniteSpace {
    FiniteSpace::l1(2)
}

fn rank_one_bilinear(u: &[f64]) -> MultilinearMap {
    MultilinearMap::from_form(vec![l1(), l1()], FiniteSpace::linf(2), &[1.0, 0.0, 0.0, 0.0], u).unwrap()
}

fn diagonal_bilinear(u: &[f64]) -> MultilinearMap {
    MultilinearMap::from_form(vec![l1(), l1()], FiniteSpace::linf(2), &[1.0, 0.0, 0.0, 1.0], u).unwrap()
}

#[test]
fn family_bound_of_a_rank_one_bilinear_map() {
    let t = rank_one_bilinear(&[0.5, -2.0]);
    let space = t.tensor_space();
    let cfg = MultilinearConfig::default();
    let fam = CoefficientFamily::plain(&space, &[vec![vec![1.0, 0.0], vec![1.0, 0.0]]]).unwrap();
    let b = strongly_family_lower_bound(&t, &TensorPhi::Identity, 1.0, &fam, &cfg).unwrap();
    assert!((b.value - 2.0).abs() < 1e-12 && b.certified);
    let zero = CoefficientFamily::plain(&space, &[vec![vec![0.0, 0.0], vec![1.0, 0.0]]]).unwrap();
    assert_eq!(strongly_family_lower_bound(&t, &TensorPhi::Identity, 1.0, &zero, &cfg).unwrap().value, 0.0);
}

#[test]
fn strongly_constant_of_a_rank_one_bilinear_map() {
    let t = rank_one_bilinear(&[0.5, -2.0]);
    let cfg = MultilinearConfig::default();
    let rep = strongly_constant(&t, &TensorPhi::Identity, 1.0, &cfg).unwrap();
    assert!((rep.report.upper_bound - 2.0).abs() < 1e-6, "{rep:?}");
    assert!((rep.report.lower_bound - 2.0).abs() < 1e-6, "{rep:?}");
    assert!(rep.agree, "{rep:?}");
    let z = MultilinearMap::zero(vec![l1(), l1()], FiniteSpace::linf(2));
    assert_eq!(strongly_constant(&z, &TensorPhi::Identity, 1.0, &cfg).unwrap().report.upper_bound, 0.0);
}

#[test]
fn order_one_reduces_to_the_linear_constant() {
    let t = MultilinearMap::new(vec![l1()], l1(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let cfg = MultilinearConfig::default();
    let rep = strongly_constant(&t, &TensorPhi::Identity, 1.0, &cfg).unwrap();
    let lin = summing_constant(&LinearMap::identity(l1()), &PhiMap::identity(l1()), 1.0, &cfg.summing).unwrap();
    assert!((rep.report.upper_bound - lin.upper_bound).abs() < 1e-12);
}

#[test]
fn linearized_and_direct_agree_on_a_dense_map() {
    let coeffs = vec![1.0, 0.2, -0.5, 0.7, 0.3, -1.0, 0.4, 0.9];
    let t = MultilinearMap::new(vec![l1(), l1()], FiniteSpace::linf(2), coeffs).unwrap();
    let rep = strongly_constant(&t, &TensorPhi::Identity, 1.0, &MultilinearConfig::default()).unwrap();
    assert!(rep.agree, "{} vs {}", rep.linearized.as_ref().unwrap().upper_bound, rep.direct.upper_bound);
    assert!(rep.report.lower_bound <= rep.report.upper_bound + 1e-9);
}

#[test]
fn strongly_factorization_commutes() {
    let cfg = MultilinearConfig::default();
    for t in [rank_one_bilinear(&[1.0, 0.5]), diagonal_bilinear(&[1.0, -1.0])] {
        let rep = strongly_constant(&t, &TensorPhi::Identity, 1.0, &cfg).unwrap();
        let f = strongly_factorization(&t, &TensorPhi::Identity, &rep, &cfg).unwrap();
        let samples = sample_tuples(&t.domains, 100, 3);
        let d = verify_strongly_factorization(&f, &samples, 1e-8).unwrap();
        assert!(d.pass, "{d:?}");
    }
}

#[test]
fn exponent_identity_is_enforced() {
    let t = rank_one_bilinear(&[1.0, 0.0]);
    let phis = vec![PhiMap::identity(l1()), PhiMap::identity(l1())];
    let err = multi_ideal_lower_bound(&t, &phis, 1.0, &[2.0, 3.0], &[]).unwrap_err();
    assert!(matches!(err, Error::ExponentIdentity { .. }));
}

#[test]
fn product_of_functionals_has_a_delta_certificate() {
    let a = vec![1.0, -0.5];
    let b = vec![0.25, 1.0];
    let u = vec![2.0, 1.0];
    // T(x, y) = <x, a><y, b> u.
    let form: Vec<f64> = crate::operators::outer(&[a.clone(), b.clone()]);
    let t = MultilinearMap::from_form(vec![l1(), l1()], FiniteSpace::linf(2), &form, &u).unwrap();
    let phis = vec![PhiMap::identity(l1()), PhiMap::identity(l1())];
    let ps = [2.0, 2.0];
    let expected = 1.0 * 1.0 * 2.0;
    let lb = multi_ideal_lower_bound(&t, &phis, 1.0, &ps, &[vec![vec![1.0, 0.0], vec![0.0, 1.0]]]).unwrap();
    assert!((lb - expected).abs() < 1e-12);
    let cfg = MultilinearConfig::default();
    let cert = multi_ideal_upper_bound(&t, &phis, 1.0, &ps, &cfg).unwrap();
    // Heuristic separation on a product of spheres.
    assert!((cert.c - expected).abs() < 1e-5, "{cert:?}");
    assert!(cert.lower_bound <= cert.c + 1e-9);
    let samples = sample_tuples(&t.domains, 100, 5);
    assert!(cert.residual(&t, &phis, &ps, &samples).unwrap() <= 1e-9);
    let f = factor_multilinear(&t, &cert, &phis, &ps, &cfg).unwrap();
    let rep = f.verify(&samples, 1e-9).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn zero_map_certificates() {
    let z = MultilinearMap::zero(vec![l1(), l1()], FiniteSpace::linf(2));
    let phis = vec![PhiMap::identity(l1()), PhiMap::identity(l1())];
    let cfg = MultilinearConfig::default();
    let cert = multi_ideal_upper_bound(&z, &phis, 1.0, &[2.0, 2.0], &cfg).unwrap();
    assert_eq!(cert.c, 0.0);
    let f = factor_multilinear(&z, &cert, &phis, &[2.0, 2.0], &cfg).unwrap();
    assert!(f.verify(&sample_tuples(&z.domains, 10, 1), 0.0).unwrap().pass);
}
