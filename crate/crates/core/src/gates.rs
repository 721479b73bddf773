//! Standard single- and two-party gates used in examples, tests and the guide.

use crate::linalg::{c64, kron, root_of_unity, CMatrix};
use crate::schmidt::BipartiteUnitary;

pub fn pauli_x() -> CMatrix {
    shift(2)
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    clock(2)
}

/// `X|j⟩ = |j+1 mod d⟩`.
pub fn shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| if r == (c + 1) % d { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
}

/// `Z|j⟩ = ω_d^j |j⟩`.
pub fn clock(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            root_of_unity(d as u32, r as i64)
        } else {
            c64(0.0, 0.0)
        }
    })
}

/// Weyl operator `X^a Z^b`.
pub fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    shift(d).pow(a as u32) * clock(d).pow(b as u32)
}

fn unchecked(matrix: CMatrix, da: usize, db: usize) -> BipartiteUnitary {
    BipartiteUnitary::new(matrix, da, db).expect("standard gate is unitary")
}

pub fn identity(da: usize, db: usize) -> BipartiteUnitary {
    unchecked(CMatrix::identity(da * db, da * db), da, db)
}

pub fn local(ua: &CMatrix, ub: &CMatrix) -> BipartiteUnitary {
    unchecked(kron(ua, ub), ua.nrows(), ub.nrows())
}

/// `Σ_j |j⟩⟨j| ⊗ V_j`, control on the first factor.
pub fn controlled(targets: &[CMatrix]) -> BipartiteUnitary {
    let da = targets.len();
    let db = targets[0].nrows();
    let mut m = CMatrix::zeros(da * db, da * db);
    for (j, v) in targets.iter().enumerate() {
        m.view_mut((j * db, j * db), (db, db)).copy_from(v);
    }
    unchecked(m, da, db)
}

pub fn cnot() -> BipartiteUnitary {
    controlled(&[CMatrix::identity(2, 2), pauli_x()])
}

pub fn swap(d: usize) -> BipartiteUnitary {
    let n = d * d;
    let m = CMatrix::from_fn(n, n, |r, c| {
        if r == (c % d) * d + c / d {
            c64(1.0, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    unchecked(m, d, d)
}

/// `Σ_j |j⟩⟨j| ⊗ Z^j` on two qutrits.
pub fn qutrit_controlled_phase() -> BipartiteUnitary {
    let z = clock(3);
    controlled(&[CMatrix::identity(3, 3), z.clone(), &z * &z])
}
