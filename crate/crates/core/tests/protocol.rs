use nlgc::expansion::{compile, generalized_pauli_expansion, CompileOptions, GroupExpansion, Side};
use nlgc::gates;
use nlgc::group::catalog::Catalog;
use nlgc::linalg::{c64, identity, kron, random_state, random_unitary, rng_from_seed, swap_state, CMatrix, CVector};
use nlgc::protocol::{
    build_m, check_m_unitary, fourier_basis, m_block_defect, measurement_phase_correction, mes, simulate_protocol,
    simulate_with_basis,
};
use nlgc::schmidt::BipartiteUnitary;

fn catalog() -> Catalog {
    Catalog::builtin(64)
}

fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = c64(1.0, 0.0);
    v
}

/// Full-register simulation on `a ⊗ A ⊗ b ⊗ B` with explicit Kronecker
/// products; returns `(h, g, probability, output on A ⊗ B)` per branch.
fn oracle_branches(exp: &GroupExpansion, psi: &CVector) -> Vec<(usize, usize, f64, CVector)> {
    assert_eq!(exp.side, Side::A);
    let n = exp.group.order();
    let (da, db) = (exp.gate.da(), exp.gate.db());
    let total = n * da * n * db;
    // |Φ⟩_ab ⊗ |ψ⟩_AB reordered to a, A, b, B.
    let mut state = CVector::zeros(total);
    for f in 0..n {
        for x in 0..da {
            for y in 0..db {
                let idx = ((f * da + x) * n + f) * db + y;
                state[idx] = psi[x * db + y] / c64((n as f64).sqrt(), 0.0);
            }
        }
    }
    let mut controlled = CMatrix::zeros(n * da, n * da);
    for f in 0..n {
        let proj = basis_vector(n, f) * basis_vector(n, f).adjoint();
        controlled += kron(&proj, &exp.u_ops.matrices[f]);
    }
    state = kron(&controlled, &identity(n * db)) * state;

    let fourier = fourier_basis(n);
    let m = build_m(&exp.group, &exp.factor_system, &exp.w_ops);
    let mut out = Vec::new();
    for h in 0..n {
        let fh = fourier.column(h).into_owned();
        let project_a = kron(&(&fh * fh.adjoint()), &identity(da * n * db));
        let z = measurement_phase_correction(h, &fourier).unwrap();
        let after = kron(&identity(n * da), &kron(&z, &identity(db))) * (&project_a * &state);
        let after = kron(&identity(n * da), &m) * after;
        for g in 0..n {
            let pg = basis_vector(n, g) * basis_vector(n, g).adjoint();
            let projected = kron(&identity(n * da), &kron(&pg, &identity(db))) * &after;
            let fix = &exp.v * exp.u_ops.matrices[g].adjoint();
            let fixed = kron(&kron(&identity(n), &fix), &identity(n * db)) * projected;
            // Amplitude of ⟨F_h|_a ⟨g|_b on the post-measurement state.
            let mut local = CVector::zeros(da * db);
            for a in 0..n {
                for x in 0..da {
                    for y in 0..db {
                        local[x * db + y] += fixed[((a * da + x) * n + g) * db + y] * fh[a].conj();
                    }
                }
            }
            out.push((h, g, local.norm_squared(), local));
        }
    }
    out
}

#[test]
fn cnot_on_plus_zero_gives_a_bell_pair_in_every_branch() {
    let exp = compile(&gates::cnot(), &CompileOptions::default(), &catalog()).unwrap();
    let s = c64(1.0 / 2f64.sqrt(), 0.0);
    let plus_zero = CVector::from_vec(vec![s, c64(0.0, 0.0), s, c64(0.0, 0.0)]);
    let bell = CVector::from_vec(vec![s, c64(0.0, 0.0), c64(0.0, 0.0), s]);
    let trace = simulate_protocol(&exp, &plus_zero).unwrap();
    assert_eq!(trace.branches.len(), 4);
    assert!(trace.certified);
    for b in &trace.branches {
        assert!((b.probability - 0.25).abs() < 1e-9);
        assert!(b.fidelity >= 1.0 - 1e-9);
    }
    for (_, _, p, out) in oracle_branches(&exp, &plus_zero) {
        assert!((p - 0.25).abs() < 1e-9);
        let normalized = &out / c64(p.sqrt(), 0.0);
        assert!((bell.dotc(&normalized).norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn library_branches_match_the_full_register_oracle() {
    let mut rng = rng_from_seed(3);
    let gatelist = [gates::cnot(), gates::swap(2), gates::qutrit_controlled_phase()];
    for u in gatelist {
        let exp = compile(&u, &CompileOptions::default(), &catalog()).unwrap();
        let psi = random_state(u.da() * u.db(), &mut rng);
        let target = u.matrix() * &psi;
        let trace = simulate_protocol(&exp, &psi).unwrap();
        let oracle = oracle_branches(&exp, &psi);
        for (b, (h, g, p, out)) in trace.branches.iter().zip(&oracle) {
            assert_eq!((b.h, b.g), (*h, *g));
            assert!((b.probability - p).abs() < 1e-10);
            let fidelity = target.dotc(out).norm_sqr() / p;
            assert!((b.fidelity - fidelity).abs() < 1e-9);
        }
    }
}

#[test]
fn swap_is_deterministic_on_random_states() {
    let exp = compile(&gates::swap(2), &CompileOptions::default(), &catalog()).unwrap();
    let mut rng = rng_from_seed(7);
    for _ in 0..20 {
        let psi = random_state(4, &mut rng);
        let trace = simulate_protocol(&exp, &psi).unwrap();
        assert_eq!(trace.branches.len(), 16);
        assert!(trace.certified);
        for b in &trace.branches {
            assert!((b.probability - 1.0 / 16.0).abs() < 1e-9);
            assert!(b.fidelity >= 1.0 - 1e-9);
        }
        assert!((trace.total_probability - 1.0).abs() < 1e-9);
    }
}

#[test]
fn trivial_group_has_a_single_branch() {
    let mut rng = rng_from_seed(1);
    let u = gates::local(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
    let exp = compile(&u, &CompileOptions::default(), &catalog()).unwrap();
    let trace = simulate_protocol(&exp, &random_state(4, &mut rng)).unwrap();
    assert_eq!(trace.branches.len(), 1);
    assert!((trace.branches[0].probability - 1.0).abs() < 1e-12);
    assert!(trace.branches[0].fidelity > 1.0 - 1e-12);
}

#[test]
fn m_blocks_carry_the_factor_system_phase() {
    for u in [gates::cnot(), gates::swap(2), gates::swap(3)] {
        let exp = compile(&u, &CompileOptions::default(), &catalog()).unwrap();
        let m = build_m(&exp.group, &exp.factor_system, &exp.w_ops);
        assert_eq!(m.nrows(), exp.group.order() * exp.w_ops[0].nrows());
        assert!(m_block_defect(&exp.group, &exp.factor_system, &exp.w_ops, &m) < 1e-12);
        assert!(check_m_unitary(&m).unitary);
    }
}

#[test]
fn phase_correction_contract_holds_for_every_outcome() {
    // After the controlled step, outcome h and Z(h), the b ⊗ A ⊗ B state is
    // N^{-1/2}·(N^{-1/2} Σ_f |f⟩ U(f)|ψ⟩), the prefactor being the outcome amplitude.
    let exp = compile(&gates::swap(2), &CompileOptions::default(), &catalog()).unwrap();
    let n = exp.group.order();
    let f = fourier_basis(n);
    let psi = random_state(4, &mut rng_from_seed(2));
    let branch = |k: usize| kron(&exp.u_ops.matrices[k], &identity(2)) * &psi;
    let mut expected = CVector::zeros(n * 4);
    for k in 0..n {
        expected.rows_mut(k * 4, 4).copy_from(&(branch(k) / c64(n as f64, 0.0)));
    }
    for h in 0..n {
        let z = measurement_phase_correction(h, &f).unwrap();
        let mut chi = CVector::zeros(n * 4);
        for k in 0..n {
            // Joint state N^{-1/2}|k⟩_a|k⟩_b U(k)|ψ⟩ projected on column h of F.
            let amp = f[(k, h)].conj() / c64((n as f64).sqrt(), 0.0) * z[(k, k)];
            chi.rows_mut(k * 4, 4).copy_from(&(branch(k) * amp));
        }
        assert!((chi - &expected).norm() < 1e-12, "outcome {h}");
    }
}

#[test]
fn other_unbiased_bases_also_work() {
    let exp = compile(&gates::cnot(), &CompileOptions::default(), &catalog()).unwrap();
    let s = 1.0 / 2f64.sqrt();
    let basis = CMatrix::from_row_slice(2, 2, &[c64(s, 0.0), c64(0.0, s), c64(s, 0.0), c64(0.0, -s)]);
    let mut rng = rng_from_seed(4);
    let trace = simulate_with_basis(&exp, &random_state(4, &mut rng), &basis).unwrap();
    assert!(trace.certified);
    assert!(simulate_with_basis(&exp, &random_state(4, &mut rng), &identity(2)).is_err());
}

#[test]
fn resource_state_has_full_schmidt_rank() {
    let exp = compile(&gates::swap(2), &CompileOptions::default(), &catalog()).unwrap();
    let trace = simulate_protocol(&exp, &random_state(4, &mut rng_from_seed(0))).unwrap();
    assert_eq!(trace.resource_schmidt_rank, 4);
    assert!((mes(4).norm() - 1.0).abs() < 1e-12);
}

#[test]
fn b_side_expansions_simulate_in_the_original_order() {
    let mut rng = rng_from_seed(9);
    let targets = [identity(3), random_unitary(3, &mut rng)];
    let m = nlgc::linalg::swap_factors(gates::controlled(&targets).matrix(), 2, 3);
    let u = BipartiteUnitary::new(m, 3, 2).unwrap();
    let exp = compile(&u, &CompileOptions::default(), &catalog()).unwrap();
    assert_eq!(exp.side, Side::B);
    for _ in 0..5 {
        let psi = random_state(6, &mut rng);
        let trace = simulate_protocol(&exp, &psi).unwrap();
        assert!(trace.certified, "min fidelity {}", trace.min_fidelity);
    }
    // Sanity of the reordering helper the simulator relies on.
    let psi = random_state(6, &mut rng);
    assert!((swap_state(&swap_state(&psi, 3, 2), 2, 3) - &psi).norm() < 1e-15);
}

#[test]
fn fallback_expansion_is_deterministic() {
    let mut rng = rng_from_seed(12);
    let u = BipartiteUnitary::new(random_unitary(6, &mut rng), 2, 3).unwrap();
    let exp = generalized_pauli_expansion(&u).unwrap();
    for _ in 0..5 {
        let trace = simulate_protocol(&exp, &random_state(6, &mut rng)).unwrap();
        assert!(trace.certified);
    }
}

#[test]
fn missing_irreps_make_m_non_unitary() {
    let zero = vec![CMatrix::zeros(2, 2); 2];
    let c2 = nlgc::group::builders::cyclic(2);
    let m = build_m(&c2, &nlgc::FactorSystem::trivial(2), &zero);
    let status = check_m_unitary(&m);
    assert!(!status.unitary);
    assert!(status.warning.unwrap().contains("linearly dependent"));
}
