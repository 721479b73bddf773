//! Operator Schmidt decomposition of bipartite unitaries.
//!
//! A gate on `C^dA ⊗ C^dB` is realigned into a `dA² × dB²` matrix that pairs
//! row and column indices of each tensor factor; its singular-value
//! factorization yields `U = Σ_j A_j ⊗ B_j` with Hilbert–Schmidt orthonormal
//! `B_j` and mutually orthogonal `A_j` carrying the weights.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, hs_inner, kron, orthonormalize, unitarity_deviation, CMatrix, CVector};
use crate::tolerance::EPS_UNITARY;

/// A unitary on `C^da ⊗ C^db`, row index `a·db + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteUnitary {
    matrix: CMatrix,
    da: usize,
    db: usize,
}

impl BipartiteUnitary {
    pub fn new(matrix: CMatrix, da: usize, db: usize) -> Result<Self> {
        if da == 0 || db == 0 {
            return Err(Error::Dimension("tensor factor dimensions must be positive".into()));
        }
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, not square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != da * db {
            return Err(Error::Dimension(format!(
                "matrix size {} does not equal dA*dB = {}*{}",
                matrix.nrows(),
                da,
                db
            )));
        }
        let deviation = unitarity_deviation(&matrix);
        if !(deviation <= EPS_UNITARY) {
            return Err(Error::Validation(format!(
                "matrix is not unitary: ||U^dag U - I||_F = {deviation:.3e} > {EPS_UNITARY:.0e}"
            )));
        }
        Ok(Self { matrix, da, db })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    /// The same gate with the tensor factors exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            matrix: crate::linalg::swap_factors(&self.matrix, self.da, self.db),
            da: self.db,
            db: self.da,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Hilbert–Schmidt weights, descending.
    pub coefficients: Vec<f64>,
    /// `dA×dA` operators; each absorbs its coefficient.
    pub a_ops: Vec<CMatrix>,
    /// Orthonormal `dB×dB` operators.
    pub b_ops: Vec<CMatrix>,
    pub da: usize,
    pub db: usize,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.da * self.db;
        self.a_ops
            .iter()
            .zip(&self.b_ops)
            .fold(CMatrix::zeros(n, n), |acc, (a, b)| acc + kron(a, b))
    }
}

/// `Tr_B[(I ⊗ b†) m]`, the A-side coefficient of `m` along `b`.
pub fn project_onto_b(m: &CMatrix, b: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da, da, |a, ap| {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..db {
            for c in 0..db {
                acc += m[(a * db + r, ap * db + c)] * b[(r, c)].conj();
            }
        }
        acc
    })
}

/// `dA² × dB²` rearrangement with entry `[(a,a'),(b,b')] = U[(a,b),(a',b')]`.
pub fn realign(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da * da, db * db, |row, col| {
        let (a, ap) = (row / da, row % da);
        let (b, bp) = (col / db, col % db);
        m[(a * db + b, ap * db + bp)]
    })
}

pub fn schmidt_decompose(u: &BipartiteUnitary, tol: f64) -> Result<SchmidtDecomposition> {
    decompose_operator(u.matrix(), u.da(), u.db(), tol)
}

/// Decomposition of any operator on `C^da ⊗ C^db`; no unitarity requirement.
pub(crate) fn decompose_operator(
    m: &CMatrix,
    da: usize,
    db: usize,
    tol: f64,
) -> Result<SchmidtDecomposition> {
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, expected {}",
            m.nrows(),
            m.ncols(),
            da * db
        )));
    }
    let realigned = realign(m, da, db);
    let svd = realigned.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > tol * smax)
        .collect();

    // Degenerate singular values leave the B basis free up to a unitary; fix
    // it by canonicalizing each cluster's span.
    let cluster_tol = 1e-8 * smax;
    let mut b_vectors: Vec<CVector> = Vec::with_capacity(kept.len());
    let mut start = 0;
    while start < kept.len() {
        let mut end = start + 1;
        while end < kept.len()
            && svd.singular_values[kept[end - 1]] - svd.singular_values[kept[end]] <= cluster_tol
        {
            end += 1;
        }
        let rows: Vec<CVector> = kept[start..end]
            .iter()
            .map(|&i| v_t.row(i).transpose())
            .collect();
        let mut canonical = canonical_basis(&rows);
        canonical.sort_by(|x, y| lex_desc(x, y));
        b_vectors.extend(canonical);
        start = end;
    }

    let b_ops: Vec<CMatrix> = b_vectors
        .iter()
        .map(|v| CMatrix::from_fn(db, db, |r, c| v[r * db + c]))
        .collect();
    let a_ops: Vec<CMatrix> = b_ops.iter().map(|b| project_onto_b(m, b, da, db)).collect();
    let coefficients = a_ops.iter().map(|a| a.norm()).collect();
    Ok(SchmidtDecomposition {
        coefficients,
        a_ops,
        b_ops,
        da,
        db,
    })
}

pub fn schmidt_rank(dec: &SchmidtDecomposition) -> usize {
    dec.rank()
}

/// Orthonormal basis of `span(rows)` derived from its reduced row echelon
/// form, so the result depends only on the span.
fn canonical_basis(rows: &[CVector]) -> Vec<CVector> {
    let k = rows.len();
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut m: Vec<CVector> = rows.to_vec();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, mag) = (pivot_row..k)
            .map(|r| (r, m[r][col].norm()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= 1e-8 {
            continue;
        }
        m.swap(pivot_row, best);
        let p = m[pivot_row][col];
        m[pivot_row] /= p;
        for r in 0..k {
            if r != pivot_row {
                let factor = m[r][col];
                if factor.norm() > 0.0 {
                    let sub = &m[pivot_row] * factor;
                    m[r] -= sub;
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    orthonormalize(&m, 1e-10)
        .into_iter()
        .map(|mut v| {
            crate::linalg::fix_phase(&mut v, 1e-8);
            v
        })
        .collect()
}

fn lex_desc(x: &CVector, y: &CVector) -> std::cmp::Ordering {
    const TIE: f64 = 1e-9;
    for (a, b) in x.iter().zip(y.iter()) {
        if (a.re - b.re).abs() > TIE {
            return b.re.total_cmp(&a.re);
        }
        if (a.im - b.im).abs() > TIE {
            return b.im.total_cmp(&a.im);
        }
    }
    std::cmp::Ordering::Equal
}

/// Largest violation of the decomposition's orthogonality invariants.
pub fn orthogonality_defect(dec: &SchmidtDecomposition) -> f64 {
    let r = dec.rank();
    let mut worst: f64 = 0.0;
    for j in 0..r {
        for k in 0..r {
            let target = if j == k { c64(1.0, 0.0) } else { c64(0.0, 0.0) };
            worst = worst.max((hs_inner(&dec.b_ops[k], &dec.b_ops[j]) - target).norm());
            if j != k {
                worst = worst.max(hs_inner(&dec.a_ops[k], &dec.a_ops[j]).norm());
            }
        }
    }
    worst
}
