//! Exact statevector simulation of the local protocol.
//!
//! Registers are ordered `a ⊗ A ⊗ b ⊗ B` with `a`, `b` the halves of a
//! maximally entangled state of Schmidt rank `N = |G|`:
//!
//! 1. Alice applies `Σ_f |f⟩⟨f|_a ⊗ U(f)_A`.
//! 2. Alice measures `a` in the basis `F` (outcome `h`); Bob applies `Z(h)`
//!    on `b`, leaving `N^{-1/2} Σ_f |f⟩_b U(f)|ψ⟩` for every `h`.
//! 3. Bob applies `M = Σ_f R(f) ⊗ W(f)` on `b ⊗ B` and measures `b`
//!    (outcome `g`).
//! 4. Alice applies `U(g)†`, then `V`.
//!
//! Every one of the `N²` branches is enumerated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{GroupExpansion, Side};
use crate::group::{FactorSystem, FiniteGroup};
use crate::linalg::{c64, identity, kron, max_abs, swap_state, unitarity_deviation, CMatrix, CVector};
use crate::tolerance::{EPS_NUM, EPS_UNITARY};

/// Entry-magnitude tolerance for admitting a measurement basis.
pub const UNBIASED_TOL: f64 = 1e-12;

pub const LINEAR_DEPENDENCE_WARNING: &str =
    "M is not unitary: the U(f) are linearly dependent (irreps missing from the expansion); the protocol is not deterministic";

#[derive(Clone, Debug, Serialize)]
pub struct MUnitarity {
    pub unitary: bool,
    pub deviation: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub h: usize,
    pub g: usize,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub branches: Vec<Branch>,
    pub m_matrix: CMatrix,
    pub f_matrix: CMatrix,
    pub m_unitarity: MUnitarity,
    /// Schmidt rank of the consumed resource state.
    pub resource_schmidt_rank: usize,
    pub total_probability: f64,
    pub min_fidelity: f64,
    /// Largest `|p − 1/N²|` over branches.
    pub probability_spread: f64,
    pub certified: bool,
}

/// `M = Σ_f R(f) ⊗ W(f)` with `R` the twisted regular representation.
pub fn build_m(group: &FiniteGroup, mu: &FactorSystem, w_ops: &[CMatrix]) -> CMatrix {
    let n = group.order();
    let db = w_ops[0].nrows();
    let mut m = CMatrix::zeros(n * db, n * db);
    // R(x) has entry μ(g, x) at (g, g·x).
    for x in 0..n {
        for g in 0..n {
            let col = group.mul(g, x);
            m.view_mut((g * db, col * db), (db, db))
                .zip_apply(&w_ops[x], |entry, w| *entry += mu.mu(g, x) * w);
        }
    }
    m
}

/// Largest entrywise deviation of `⟨g|M|f⟩` from `μ(g, g⁻¹f)·W(g⁻¹f)`.
pub fn m_block_defect(group: &FiniteGroup, mu: &FactorSystem, w_ops: &[CMatrix], m: &CMatrix) -> f64 {
    let n = group.order();
    let db = w_ops[0].nrows();
    let mut worst: f64 = 0.0;
    for g in 0..n {
        for f in 0..n {
            let x = group.mul(group.inv(g), f);
            let expected = &w_ops[x] * mu.mu(g, x);
            let block = m.view((g * db, f * db), (db, db));
            worst = worst.max(max_abs(&(block - expected)));
        }
    }
    worst
}

pub fn check_m_unitary(m: &CMatrix) -> MUnitarity {
    let deviation = unitarity_deviation(m);
    let unitary = deviation <= EPS_UNITARY;
    MUnitarity {
        unitary,
        deviation,
        warning: (!unitary).then(|| format!("{LINEAR_DEPENDENCE_WARNING} (deviation {deviation:.3e})")),
    }
}

/// `F_{hk} = ω_N^{hk}/√N`.
pub fn fourier_basis(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, h| crate::linalg::root_of_unity(n as u32, (h * k) as i64) * scale)
}

fn check_unbiased(basis: &CMatrix) -> Result<()> {
    let n = basis.nrows();
    if basis.ncols() != n {
        return Err(Error::Dimension("measurement basis must be square".into()));
    }
    if unitarity_deviation(basis) > EPS_UNITARY {
        return Err(Error::Validation("measurement basis is not orthonormal".into()));
    }
    let target = 1.0 / (n as f64).sqrt();
    if let Some(bad) = basis.iter().find(|z| (z.norm() - target).abs() > UNBIASED_TOL) {
        return Err(Error::Validation(format!(
            "measurement basis is not unbiased: entry magnitude {} differs from {target}",
            bad.norm()
        )));
    }
    Ok(())
}

/// `Z(h) = diag(√N·F[f, h])`: projecting `a` onto column `h` of `F` leaves
/// the phase `conj(F[f, h])` on branch `f`, which `Z(h)` cancels.
pub fn measurement_phase_correction(h: usize, basis: &CMatrix) -> Result<CMatrix> {
    check_unbiased(basis)?;
    let n = basis.nrows();
    if h >= n {
        return Err(Error::Dimension(format!("outcome {h} out of range for {n} outcomes")));
    }
    let scale = (n as f64).sqrt();
    Ok(CMatrix::from_diagonal(&CVector::from_fn(n, |f, _| basis[(f, h)] * scale)))
}

/// `N^{-1/2} Σ_f |f⟩|f⟩`.
pub fn mes(n: usize) -> CVector {
    let mut v = CVector::zeros(n * n);
    for f in 0..n {
        v[f * n + f] = c64(1.0 / (n as f64).sqrt(), 0.0);
    }
    v
}

fn schmidt_rank_of_state(psi: &CVector, n: usize) -> usize {
    let m = CMatrix::from_fn(n, n, |i, j| psi[i * n + j]);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

pub fn simulate_protocol(exp: &GroupExpansion, psi: &CVector) -> Result<ProtocolTrace> {
    simulate_with_basis(exp, psi, &fourier_basis(exp.group.order()))
}

/// Simulation with Alice measuring `a` in the columns of `basis`.
pub fn simulate_with_basis(exp: &GroupExpansion, psi: &CVector, basis: &CMatrix) -> Result<ProtocolTrace> {
    let n = exp.group.order();
    let gate = exp.oriented_gate();
    let (da, db) = (gate.da(), gate.db());
    if psi.len() != da * db {
        return Err(Error::Dimension(format!("state has length {}, expected {}", psi.len(), da * db)));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Validation(format!("input state has norm {norm}")));
    }
    if basis.nrows() != n {
        return Err(Error::Dimension(format!("measurement basis must be {n}x{n}")));
    }
    check_unbiased(basis)?;
    let psi = match exp.side {
        Side::A => psi.clone(),
        Side::B => swap_state(psi, db, da),
    };
    let target = gate.matrix() * &psi;

    let resource = mes(n);
    let resource_schmidt_rank = schmidt_rank_of_state(&resource, n);
    let m = build_m(&exp.group, &exp.factor_system, &exp.w_ops);
    let m_unitarity = check_m_unitary(&m);

    // Joint state as blocks indexed by (a, b), each a vector on A ⊗ B.
    let dim = da * db;
    let block = |st: &[CVector], a: usize, b: usize| st[a * n + b].clone();
    let mut state: Vec<CVector> = (0..n * n)
        .map(|ab| &psi * resource[ab])
        .collect();

    let u_local: Vec<CMatrix> = exp.u_ops.matrices.iter().map(|u| kron(u, &identity(db))).collect();
    for a in 0..n {
        for b in 0..n {
            state[a * n + b] = &u_local[a] * &state[a * n + b];
        }
    }

    let corrections: Vec<CMatrix> = exp
        .u_ops
        .matrices
        .iter()
        .map(|u| kron(&(&exp.v * u.adjoint()), &identity(db)))
        .collect();
    let m_blocks: Vec<Vec<CMatrix>> = (0..n)
        .map(|g| {
            (0..n)
                .map(|f| kron(&identity(da), &m.view((g * db, f * db), (db, db)).into_owned()))
                .collect()
        })
        .collect();

    let mut branches = Vec::with_capacity(n * n);
    for h in 0..n {
        let z = measurement_phase_correction(h, basis)?;
        // Project a onto column h of F, then Z(h) on b.
        let after_z: Vec<CVector> = (0..n)
            .map(|b| {
                let projected = (0..n).fold(CVector::zeros(dim), |acc, a| acc + block(&state, a, b) * basis[(a, h)].conj());
                projected * z[(b, b)]
            })
            .collect();
        for g in 0..n {
            let after_m = (0..n).fold(CVector::zeros(dim), |acc, f| acc + &m_blocks[g][f] * &after_z[f]);
            let out = &corrections[g] * after_m;
            let probability = out.norm_squared();
            let fidelity = if probability > 0.0 {
                target.dotc(&out).norm_sqr() / probability
            } else {
                0.0
            };
            branches.push(Branch {
                h,
                g,
                probability,
                fidelity,
            });
        }
    }

    let total_probability = branches.iter().map(|b| b.probability).sum();
    let min_fidelity = branches.iter().map(|b| b.fidelity).fold(f64::INFINITY, f64::min);
    let uniform = 1.0 / (n * n) as f64;
    let probability_spread = branches
        .iter()
        .map(|b| (b.probability - uniform).abs())
        .fold(0.0, f64::max);
    let certified = m_unitarity.unitary
        && min_fidelity >= 1.0 - EPS_NUM
        && probability_spread <= EPS_NUM
        && resource_schmidt_rank == n;
    Ok(ProtocolTrace {
        branches,
        m_matrix: m,
        f_matrix: basis.clone(),
        m_unitarity,
        resource_schmidt_rank,
        total_probability,
        min_fidelity,
        probability_spread,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_outcome_corrections() {
        let f = fourier_basis(2);
        let z0 = measurement_phase_correction(0, &f).unwrap();
        let z1 = measurement_phase_correction(1, &f).unwrap();
        assert!((z0 - identity(2)).norm() < 1e-12);
        assert!((z1[(1, 1)] - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!(measurement_phase_correction(0, &identity(2)).is_err());
    }

    #[test]
    fn zero_coefficients_fail_unitarity() {
        let status = check_m_unitary(&CMatrix::zeros(4, 4));
        assert!(!status.unitary);
        assert!(status.warning.is_some());
        assert!(check_m_unitary(&identity(3)).deviation == 0.0);
    }
}
