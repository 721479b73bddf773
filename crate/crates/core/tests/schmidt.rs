use nalgebra::DMatrix;
use nlgc::gates;
use nlgc::linalg::{c64, kron, random_unitary, rng_from_seed, CMatrix};
use nlgc::schmidt::{orthogonality_defect, schmidt_decompose, BipartiteUnitary};
use nlgc::tolerance::RANK_TOL;

/// Squared Schmidt coefficients as eigenvalues of `Σ_{b,b'} U[(a,b),(a',b')]·conj(U[(c,b),(c',b')])`,
/// built entry by entry without the library's realignment.
fn oracle_weights(u: &CMatrix, da: usize, db: usize) -> Vec<f64> {
    let n = da * da;
    let mut k = DMatrix::<num_complex::Complex64>::zeros(n, n);
    for a in 0..da {
        for ap in 0..da {
            for c in 0..da {
                for cp in 0..da {
                    let mut acc = c64(0.0, 0.0);
                    for b in 0..db {
                        for bp in 0..db {
                            acc += u[(a * db + b, ap * db + bp)] * u[(c * db + b, cp * db + bp)].conj();
                        }
                    }
                    k[(a * da + ap, c * da + cp)] = acc;
                }
            }
        }
    }
    let mut w: Vec<f64> = k.symmetric_eigenvalues().iter().copied().filter(|&x| x > 1e-9).collect();
    w.sort_by(|x, y| y.total_cmp(x));
    w
}

#[test]
fn coefficients_match_the_independent_weight_oracle() {
    let mut rng = rng_from_seed(21);
    for (da, db) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let u = BipartiteUnitary::new(random_unitary(da * db, &mut rng), da, db).unwrap();
        let dec = schmidt_decompose(&u, RANK_TOL).unwrap();
        let oracle = oracle_weights(u.matrix(), da, db);
        assert_eq!(dec.rank(), oracle.len());
        for (c, w) in dec.coefficients.iter().zip(&oracle) {
            assert!((c * c - w).abs() < 1e-9, "{c}² vs {w}");
        }
        assert!((dec.reconstruct() - u.matrix()).norm() < 1e-10);
        assert!(orthogonality_defect(&dec) < 1e-10);
    }
}

#[test]
fn cnot_splits_into_control_projectors() {
    let dec = schmidt_decompose(&gates::cnot(), RANK_TOL).unwrap();
    assert_eq!(dec.rank(), 2);
    for c in &dec.coefficients {
        assert!((c - 2f64.sqrt()).abs() < 1e-12);
    }
    let s = 2f64.sqrt();
    let p0 = CMatrix::from_row_slice(2, 2, &[c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
    let p1 = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)]);
    let inv_s = c64(1.0 / s, 0.0);
    assert!((&dec.a_ops[0] - p0).norm() < 1e-12);
    assert!((&dec.a_ops[1] - p1).norm() < 1e-12);
    assert!((&dec.b_ops[0] - CMatrix::identity(2, 2) * inv_s).norm() < 1e-12);
    assert!((&dec.b_ops[1] - gates::pauli_x() * inv_s).norm() < 1e-12);
}

#[test]
fn known_ranks() {
    assert_eq!(schmidt_decompose(&gates::swap(2), RANK_TOL).unwrap().rank(), 4);
    assert_eq!(schmidt_decompose(&gates::swap(3), RANK_TOL).unwrap().rank(), 9);
    assert_eq!(schmidt_decompose(&gates::qutrit_controlled_phase(), RANK_TOL).unwrap().rank(), 3);
    let mut rng = rng_from_seed(2);
    let local = gates::local(&random_unitary(3, &mut rng), &random_unitary(2, &mut rng));
    let dec = schmidt_decompose(&local, RANK_TOL).unwrap();
    assert_eq!(dec.rank(), 1);
    assert!((dec.coefficients[0] - 6f64.sqrt()).abs() < 1e-10);
}

#[test]
fn swap_coefficients_are_all_one() {
    let dec = schmidt_decompose(&gates::swap(3), RANK_TOL).unwrap();
    assert!(dec.coefficients.iter().all(|c| (c - 1.0).abs() < 1e-12));
}

#[test]
fn weights_sum_to_the_dimension() {
    let mut rng = rng_from_seed(8);
    for _ in 0..10 {
        let u = BipartiteUnitary::new(random_unitary(6, &mut rng), 2, 3).unwrap();
        let dec = schmidt_decompose(&u, RANK_TOL).unwrap();
        let total: f64 = dec.coefficients.iter().map(|c| c * c).sum();
        assert!((total - 6.0).abs() < 1e-10);
    }
}

#[test]
fn rank_and_weights_are_local_unitary_invariant() {
    let mut rng = rng_from_seed(13);
    for case in 0..20 {
        let (da, db) = if case % 2 == 0 { (2, 2) } else { (3, 2) };
        let base = if case % 3 == 0 {
            gates::controlled(&(0..da).map(|_| random_unitary(db, &mut rng)).collect::<Vec<_>>())
        } else {
            BipartiteUnitary::new(random_unitary(da * db, &mut rng), da, db).unwrap()
        };
        let left = kron(&random_unitary(da, &mut rng), &random_unitary(db, &mut rng));
        let right = kron(&random_unitary(da, &mut rng), &random_unitary(db, &mut rng));
        let moved = BipartiteUnitary::new(&left * base.matrix() * &right, da, db).unwrap();
        let d0 = schmidt_decompose(&base, RANK_TOL).unwrap();
        let d1 = schmidt_decompose(&moved, RANK_TOL).unwrap();
        assert_eq!(d0.rank(), d1.rank(), "case {case}");
        for (x, y) in d0.coefficients.iter().zip(&d1.coefficients) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn decomposition_is_deterministic() {
    let u = gates::qutrit_controlled_phase();
    let a = schmidt_decompose(&u, RANK_TOL).unwrap();
    let b = schmidt_decompose(&u, RANK_TOL).unwrap();
    for (x, y) in a.a_ops.iter().zip(&b.a_ops) {
        assert_eq!(x, y);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let m = CMatrix::identity(6, 6);
    assert!(BipartiteUnitary::new(m.clone(), 2, 2).is_err());
    assert!(BipartiteUnitary::new(m * c64(2.0, 0.0), 2, 3).is_err());
}
