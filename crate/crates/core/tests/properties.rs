use proptest::prelude::*;
use rug::Rational;

use pentalab::algebra::{dot, nullspace_covector, q, LaurentMatrix, LaurentPoly, Matrix, Ring, Scalar};
use pentalab::kdvlimit::operator::{commutator_with_residual, ORDER_DROP_TOL};
use pentalab::kdvlimit::{curve_from_potentials, q2_of, CircleGrid, DiffOperator};
use pentalab::lax::{lax_matrix, lax_monodromy, spectral, SpectralPolynomial};
use pentalab::pentagram::{image_polygon, pentagram_map};
use pentalab::polygon::{coords_of_polygon, extract_coords, random_polygon, reconstruct_vertices};
use pentalab::scaling::{apply_scaling, scaling_invariance_check};
use pentalab::TwistedCoords;

fn laurent_matrix(size: usize, entries: &[(i64, i64, i64)]) -> LaurentMatrix<Rational> {
    LaurentMatrix::from_fn(size, |i, j| {
        let (a, b, e) = entries[i * size + j];
        LaurentPoly::from_terms(&(), [(e, q(a, 1)), (e + 1, q(b, 1))])
    })
}

fn entries(size: usize) -> impl Strategy<Value = Vec<(i64, i64, i64)>> {
    prop::collection::vec((-4i64..=4, -4i64..=4, -2i64..=2), size * size)
}

/// A unimodular integer matrix from a word in elementary shears.
fn unimodular(dim: usize, word: &[(usize, usize, i64)]) -> Matrix<Rational> {
    let mut g = Matrix::identity(dim, &());
    for &(i, j, c) in word {
        let (i, j) = (i % dim, j % dim);
        if i == j {
            continue;
        }
        let mut e = Matrix::identity(dim, &());
        e.set(i, j, q(c, 1));
        g = e.mul(&g);
    }
    g
}

fn shear_word() -> impl Strategy<Value = Vec<(usize, usize, i64)>> {
    prop::collection::vec((0usize..8, 0usize..8, -3i64..=3), 1..8)
}

fn coprime_shape() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=6, 0usize..4).prop_map(|(d, k)| {
        let n = (d + 2..).filter(|n| gcd(*n, d + 1) == 1).nth(k).unwrap();
        (d, n)
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn scaling_shape() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((2usize, 5usize)), Just((3, 5)), Just((4, 7)), Just((5, 7)), Just((6, 8))]
}

fn nonzero_ratio() -> impl Strategy<Value = Rational> {
    (1i64..=6, 1i64..=6, any::<bool>()).prop_map(|(a, b, neg)| q(if neg { -a } else { a }, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn char_poly_of_products_commutes(a in entries(3), b in entries(3)) {
        let (a, b) = (laurent_matrix(3, &a), laurent_matrix(3, &b));
        prop_assert_eq!(a.mat_mul(&b).unwrap().char_poly(), b.mat_mul(&a).unwrap().char_poly());
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), j in 0i64..5) {
        let c = random_polygon::<Rational>(3, 5, seed, 4.0, &()).unwrap();
        let (a, b) = (lax_matrix(&c, j), lax_matrix(&c, j + 1));
        prop_assert!(a.det().as_monomial().is_some());
        prop_assert_eq!(a.mat_mul(&b).unwrap().det(), a.det().mul(&b.det()));
    }

    #[test]
    fn covector_annihilates_its_points(d in 2usize..=5, raw in prop::collection::vec(-9i64..=9, 42)) {
        let points: Vec<Vec<Rational>> = (0..d).map(|i| (0..=d).map(|k| q(raw[i * 7 + k], 1)).collect()).collect();
        if let Ok(h) = nullspace_covector(&points) {
            for p in &points {
                prop_assert!(dot(&h, p).is_zero());
            }
        }
    }

    #[test]
    fn coordinates_round_trip((d, n) in coprime_shape(), seed in any::<u64>()) {
        let c = random_polygon::<Rational>(d, n, seed, 5.0, &()).unwrap();
        prop_assert_eq!(extract_coords(&reconstruct_vertices(&c)).unwrap(), c);
    }

    #[test]
    fn coordinates_are_projective_invariants(seed in any::<u64>(), word in shear_word()) {
        let c = random_polygon::<Rational>(3, 7, seed, 4.0, &()).unwrap();
        let p = reconstruct_vertices(&c).projectivize();
        let moved = p.transform(&unimodular(4, &word)).unwrap();
        prop_assert_eq!(coords_of_polygon(&moved).unwrap(), c);
    }

    #[test]
    fn map_commutes_with_projective_action(seed in any::<u64>(), word in shear_word()) {
        let c = random_polygon::<Rational>(2, 7, seed, 4.0, &()).unwrap();
        let p = reconstruct_vertices(&c).projectivize();
        let g = unimodular(3, &word);
        let left = coords_of_polygon(&image_polygon(&p.transform(&g).unwrap()).unwrap()).unwrap();
        let right = coords_of_polygon(&image_polygon(&p).unwrap().transform(&g).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn map_preserves_monodromy(seed in any::<u64>(), d in 2usize..=4) {
        let c = random_polygon::<Rational>(d, 7, seed, 4.0, &()).unwrap();
        let p = reconstruct_vertices(&c).projectivize();
        let image = image_polygon(&p).unwrap();
        prop_assert_eq!(image.monodromy(), p.monodromy());
    }

    #[test]
    fn spectral_function_is_conserved(seed in any::<u64>(), (d, n) in prop_oneof![Just((2usize, 5usize)), Just((2, 7)), Just((3, 5)), Just((3, 7))]) {
        let c = random_polygon::<Rational>(d, n, seed, 5.0, &()).unwrap();
        prop_assert_eq!(spectral(&pentagram_map(&c).unwrap()).unwrap().rows, spectral(&c).unwrap().rows);
    }

    #[test]
    fn spectral_function_ignores_the_base_point(seed in any::<u64>(), i in 1i64..7) {
        let c = random_polygon::<Rational>(3, 7, seed, 5.0, &()).unwrap();
        let at = |i| SpectralPolynomial::from_char_poly(3, 7, lax_monodromy(&c, i).char_poly()).rows;
        prop_assert_eq!(at(i), at(0));
    }

    #[test]
    fn eigenvalue_product_in_3d(seed in any::<u64>(), n in prop_oneof![Just(5usize), Just(7), Just(9)]) {
        let sp = spectral(&random_polygon::<Rational>(3, n, seed, 5.0, &()).unwrap()).unwrap();
        let lambda = q(2, 3);
        prop_assert_eq!(sp.eval(&lambda, &q(0, 1)), lambda.pow_i(-2 * n as i64));
    }

    #[test]
    fn scaling_is_a_group_action(seed in any::<u64>(), (d, n) in scaling_shape(), s in nonzero_ratio(), t in nonzero_ratio()) {
        let c = random_polygon::<Rational>(d, n, seed, 4.0, &()).unwrap();
        let twice = apply_scaling(&apply_scaling(&c, &s).unwrap(), &t).unwrap();
        prop_assert_eq!(twice, apply_scaling(&c, &s.mul(&t)).unwrap());
    }

    #[test]
    fn scaling_commutes_with_the_map(seed in any::<u64>(), (d, n) in scaling_shape(), s in nonzero_ratio()) {
        let c: TwistedCoords<Rational> = random_polygon(d, n, seed, 4.0, &()).unwrap();
        prop_assert_eq!(scaling_invariance_check(&c, &s).unwrap(), 0.0);
    }
}

fn smooth_operator(g: &CircleGrid, amps: &[(f64, f64)]) -> DiffOperator {
    let u = amps
        .iter()
        .enumerate()
        .map(|(j, &(a, b))| g.sample(|x| a * ((j + 1) as f64 * x).sin() + b * (2.0 * x - j as f64).cos()))
        .collect();
    DiffOperator::agd(g, u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn commutator_drops_order(amps in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 2..=4)) {
        let g = CircleGrid::new(128).unwrap();
        let l = smooth_operator(&g, &amps);
        let (c, res) = commutator_with_residual(&q2_of(&l), &l).unwrap();
        prop_assert!(res <= ORDER_DROP_TOL);
        prop_assert_eq!(c.order(), amps.len() - 1);
    }

    #[test]
    fn lifted_curve_keeps_unit_wronskian(amps in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 2..=3)) {
        let g = CircleGrid::new(32).unwrap();
        let curve = curve_from_potentials(&smooth_operator(&g, &amps)).unwrap();
        prop_assert!(curve.wronskian_defect() <= 1e-10);
    }
}
