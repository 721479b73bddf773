//! Dense complex linear-algebra helpers shared by every stage of the pipeline.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Deterministic generator used wherever a seed is threaded through the API.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(2πi k / r)`, exact for the cardinal points.
pub fn root_of_unity(r: u32, k: i64) -> Complex64 {
    if r == 0 {
        return c64(1.0, 0.0);
    }
    let k = k.rem_euclid(r as i64);
    // Exact values keep group-theoretic identities free of round-off.
    if (4 * k) % r as i64 == 0 {
        return match (4 * k) / r as i64 {
            0 => c64(1.0, 0.0),
            1 => c64(0.0, 1.0),
            2 => c64(-1.0, 0.0),
            _ => c64(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / r as f64)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `‖m†m − I‖_F`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m.adjoint() * m - identity(m.nrows())).norm()
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Orthonormal basis of the kernel of `a`; singular values at or below
/// `rel_tol · σ_max` count as zero.
pub fn nullspace(a: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    kernel(a, |smax| rel_tol * smax)
}

/// Kernel with singular values at or below `abs_tol` counted as zero.
pub fn nullspace_abs(a: &CMatrix, abs_tol: f64) -> Vec<CVector> {
    kernel(a, |_| abs_tol)
}

fn kernel(a: &CMatrix, threshold: impl Fn(f64) -> f64) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let square = if a.nrows() > n {
        a.clone().qr().r()
    } else {
        let mut m = CMatrix::zeros(n, n);
        m.rows_mut(0, a.nrows()).copy_from(a);
        m
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = threshold(smax);
    let mut out = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= threshold {
            out.push(v_t.row(i).adjoint());
        }
    }
    out
}

/// Modified Gram–Schmidt in input order with one re-orthogonalization pass.
/// Vectors whose residual falls below `tol · max_norm` are skipped.
pub fn orthonormalize(vectors: &[CVector], tol: f64) -> Vec<CVector> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CVector> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm > tol * scale {
            basis.push(w / c64(norm, 0.0));
        }
    }
    basis
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Rotate `v` so its first entry with magnitude above `tol` is real positive.
pub fn fix_phase(v: &mut CVector, tol: f64) {
    if let Some(z) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

/// Reorders `|a⟩⊗|b⟩` to `|b⟩⊗|a⟩` for an operator on `C^da ⊗ C^db`.
pub fn swap_factors(u: &CMatrix, da: usize, db: usize) -> CMatrix {
    let n = da * db;
    let perm = |i: usize| (i % db) * da + i / db;
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(perm(r), perm(c))] = u[(r, c)];
        }
    }
    out
}

/// Same reordering for a state vector.
pub fn swap_state(psi: &CVector, da: usize, db: usize) -> CVector {
    let mut out = CVector::zeros(da * db);
    for i in 0..da * db {
        out[(i % db) * da + i / db] = psi[i];
    }
    out
}

pub fn random_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_complex_matrix(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// `exp(iH)` for a random Hermitian `H`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let h = random_hermitian(n, rng);
    let (values, q) = hermitian_eigen(&h);
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        n,
        values.iter().map(|&l| Complex64::from_polar(1.0, l)),
    ));
    &q * phases * q.adjoint()
}

pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / c64(norm, 0.0)
}

/// Embed `block` at rows/cols `indices` of an `n×n` zero matrix.
pub fn embed(n: usize, indices: &[usize], block: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for (i, &r) in indices.iter().enumerate() {
        for (j, &c) in indices.iter().enumerate() {
            out[(r, c)] = block[(i, j)];
        }
    }
    out
}

pub fn extract(m: &CMatrix, indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(indices.len(), indices.len(), |i, j| m[(indices[i], indices[j])])
}

/// Round to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    let formatted = format!("{:.*e}", digits.saturating_sub(1), x);
    let y: f64 = formatted.parse().unwrap_or(x);
    if y == 0.0 {
        0.0
    } else {
        y
    }
}
