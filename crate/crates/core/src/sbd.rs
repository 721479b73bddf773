//! Finest simultaneous block diagonalization under unitary similarity.
//!
//! For a set of matrices closed under adjoints, the commutant is a direct sum
//! of full matrix algebras, one per class of equivalent irreducible blocks.
//! A generic Hermitian element of the commutant therefore has one eigenspace
//! per irreducible block. Diagonalizing it and taking connected components of
//! the support graph of the transformed matrices yields the finest block form.

use std::ops::Range;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, fix_phase, hermitian_eigen, identity, kron, nullspace_abs, orthonormalize, rng_from_seed,
    unitarity_deviation, CMatrix, CVector, SeededRng,
};
use crate::schmidt::SchmidtDecomposition;

/// Blocks of one equivalence class. The first member is the representative;
/// `intertwiners[i]` satisfies `T·R^(rep)·T† = R^(member i)`.
#[derive(Clone, Debug)]
pub struct EquivalenceClass {
    pub members: Vec<usize>,
    pub intertwiners: Vec<CMatrix>,
}

impl EquivalenceClass {
    pub fn representative(&self) -> usize {
        self.members[0]
    }

    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug)]
pub struct BlockStructure {
    /// Unitary `S`; `S†·M·S` is block diagonal.
    pub basis_change: CMatrix,
    pub block_sizes: Vec<usize>,
    /// Empty until [`classify_equivalence`] runs.
    pub classes: Vec<EquivalenceClass>,
}

impl BlockStructure {
    pub fn dim(&self) -> usize {
        self.basis_change.nrows()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_range(&self, block: usize) -> Range<usize> {
        let start: usize = self.block_sizes[..block].iter().sum();
        start..start + self.block_sizes[block]
    }

    /// `S† M S`.
    pub fn transform(&self, m: &CMatrix) -> CMatrix {
        self.basis_change.adjoint() * m * &self.basis_change
    }

    pub fn block_of(&self, transformed: &CMatrix, block: usize) -> CMatrix {
        let r = self.block_range(block);
        transformed.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    /// `(class index, position within class)` of a block.
    pub fn class_of(&self, block: usize) -> Option<(usize, usize)> {
        self.classes.iter().enumerate().find_map(|(ci, class)| {
            class.members.iter().position(|&m| m == block).map(|p| (ci, p))
        })
    }

    /// `(dimension, multiplicity)` per class.
    pub fn class_dims(&self) -> Vec<(usize, usize)> {
        self.classes
            .iter()
            .map(|c| (self.block_sizes[c.representative()], c.multiplicity()))
            .collect()
    }

    /// Largest off-block magnitude of `S† M S` over `mats`.
    pub fn off_block_max(&self, mats: &[CMatrix]) -> f64 {
        let mut owner = vec![0usize; self.dim()];
        for b in 0..self.num_blocks() {
            for i in self.block_range(b) {
                owner[i] = b;
            }
        }
        let mut worst: f64 = 0.0;
        for m in mats {
            let t = self.transform(m);
            for r in 0..t.nrows() {
                for c in 0..t.ncols() {
                    if owner[r] != owner[c] {
                        worst = worst.max(t[(r, c)].norm());
                    }
                }
            }
        }
        worst
    }
}

/// All products `A_j† A_k` in row-major `(j, k)` order.
pub fn gram_set(dec: &SchmidtDecomposition) -> Vec<CMatrix> {
    gram_of(&dec.a_ops)
}

pub fn gram_of(ops: &[CMatrix]) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(ops.len() * ops.len());
    for aj in ops {
        for ak in ops {
            out.push(aj.adjoint() * ak);
        }
    }
    out
}

fn check_sizes(mats: &[CMatrix]) -> Result<usize> {
    let n = mats
        .first()
        .ok_or_else(|| Error::Dimension("empty matrix set".into()))?
        .nrows();
    for (i, m) in mats.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!(
                "matrix {i} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(n)
}

/// Orthonormal (Hilbert–Schmidt) basis of `span{M, M†}`, rescaled so the
/// set has unit maximal norm.
fn star_closed_basis(mats: &[CMatrix]) -> Vec<CMatrix> {
    let n = mats[0].nrows();
    let flat: Vec<CVector> = mats
        .iter()
        .flat_map(|m| [m.clone(), m.adjoint()])
        .map(|m| CVector::from_iterator(n * n, m.iter().cloned()))
        .collect();
    orthonormalize(&flat, 1e-12)
        .into_iter()
        .map(|v| CMatrix::from_iterator(n, n, v.iter().cloned()))
        .collect()
}

/// Basis of `{X : XM = MX for all M in mats ∪ mats†}`.
pub fn commutant_basis(mats: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let n = check_sizes(mats)?;
    let gens = star_closed_basis(mats);
    if gens.is_empty() {
        return Ok(unit_basis(n));
    }
    let id = identity(n);
    let mut stacked = CMatrix::zeros(gens.len() * n * n, n * n);
    for (i, m) in gens.iter().enumerate() {
        // column-major vec: vec(XM − MX) = (Mᵀ⊗I − I⊗M) vec(X)
        let k = kron(&m.transpose(), &id) - kron(&id, m);
        stacked.view_mut((i * n * n, 0), (n * n, n * n)).copy_from(&k);
    }
    // Generators are orthonormal, so an absolute cutoff is scale-free.
    Ok(nullspace_abs(&stacked, tol)
        .into_iter()
        .map(|v| CMatrix::from_iterator(n, n, v.iter().cloned()))
        .collect())
}

fn unit_basis(n: usize) -> Vec<CMatrix> {
    (0..n * n)
        .map(|k| {
            let mut m = CMatrix::zeros(n, n);
            m[(k % n, k / n)] = c64(1.0, 0.0);
            m
        })
        .collect()
}

pub fn commutant_dimension(mats: &[CMatrix], tol: f64) -> Result<usize> {
    Ok(commutant_basis(mats, tol)?.len())
}

fn gaussian(rng: &mut SeededRng) -> Complex64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Finest block form of `mats` under one unitary conjugation.
pub fn finest_sbd(mats: &[CMatrix], tol: f64, seed: u64) -> Result<BlockStructure> {
    let basis = commutant_basis(mats, tol)?;
    let n = mats[0].nrows();
    let mut rng = rng_from_seed(seed);
    finest_sbd_sampled(mats, tol, &mut rng, |rng| {
        let mut x = CMatrix::zeros(n, n);
        for b in &basis {
            x += b * gaussian(rng);
        }
        &x + x.adjoint()
    })
}

/// Same algorithm with a caller-supplied sampler of Hermitian commutant
/// elements (e.g. a group twirl).
pub(crate) fn finest_sbd_sampled<F>(
    mats: &[CMatrix],
    tol: f64,
    rng: &mut SeededRng,
    mut sample: F,
) -> Result<BlockStructure>
where
    F: FnMut(&mut SeededRng) -> CMatrix,
{
    check_sizes(mats)?;
    let gens = star_closed_basis(mats);
    let first = structure_from_sample(&gens, &sample(rng), tol, mats[0].nrows());
    let second = structure_from_sample(&gens, &sample(rng), tol, mats[0].nrows());
    let sizes = |bs: &BlockStructure| {
        let mut s = bs.block_sizes.clone();
        s.sort_unstable();
        s
    };
    if sizes(&first) != sizes(&second) {
        return Err(Error::Nondeterministic {
            first: first.block_sizes,
            second: second.block_sizes,
        });
    }
    Ok(first)
}

fn structure_from_sample(gens: &[CMatrix], h: &CMatrix, tol: f64, n: usize) -> BlockStructure {
    let (_, q) = hermitian_eigen(h);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in gens {
        let t = q.adjoint() * g * &q;
        for r in 0..n {
            for c in (r + 1)..n {
                if t[(r, c)].norm() > tol || t[(c, r)].norm() > tol {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if root_slot[root] == usize::MAX {
            root_slot[root] = components.len();
            components.push(Vec::new());
        }
        components[root_slot[root]].push(i);
    }
    // Order by (size, first original coordinate the block's subspace touches).
    let first_coordinate = |comp: &[usize]| {
        (0..n)
            .find(|&i| comp.iter().map(|&p| q[(i, p)].norm_sqr()).sum::<f64>() > 1e-8)
            .unwrap_or(n)
    };
    components.sort_by_key(|comp| (comp.len(), first_coordinate(comp), comp[0]));

    let mut s = CMatrix::zeros(n, n);
    let mut col = 0;
    for comp in &components {
        for &p in comp {
            let mut v: CVector = q.column(p).into_owned();
            fix_phase(&mut v, 1e-8);
            s.set_column(col, &v);
            col += 1;
        }
    }
    BlockStructure {
        basis_change: s,
        block_sizes: components.iter().map(|c| c.len()).collect(),
        classes: Vec::new(),
    }
}

/// Groups blocks into equivalence classes with unitary intertwiners.
pub fn classify_equivalence(bs: &BlockStructure, mats: &[CMatrix], tol: f64) -> BlockStructure {
    let gens: Vec<CMatrix> = if mats.is_empty() {
        Vec::new()
    } else {
        star_closed_basis(mats)
            .iter()
            .map(|g| bs.transform(g))
            .collect()
    };
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for block in 0..bs.num_blocks() {
        let size = bs.block_sizes[block];
        let member_blocks: Vec<CMatrix> = gens.iter().map(|t| bs.block_of(t, block)).collect();
        let mut placed = false;
        for class in classes.iter_mut() {
            let rep = class.representative();
            if bs.block_sizes[rep] != size {
                continue;
            }
            let rep_blocks: Vec<CMatrix> = gens.iter().map(|t| bs.block_of(t, rep)).collect();
            if let Some(t) = intertwiner(&rep_blocks, &member_blocks, tol) {
                class.members.push(block);
                class.intertwiners.push(t);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(EquivalenceClass {
                members: vec![block],
                intertwiners: vec![identity(size)],
            });
        }
    }
    BlockStructure {
        classes,
        ..bs.clone()
    }
}

/// Unitary `T` with `T·R_i = M_i·T` for all `i`, if one exists.
pub fn intertwiner(rep: &[CMatrix], member: &[CMatrix], tol: f64) -> Option<CMatrix> {
    let d = rep.first().map(|m| m.nrows()).unwrap_or(1);
    if rep.is_empty() {
        return Some(identity(d));
    }
    let id = identity(d);
    let mut stacked = CMatrix::zeros(rep.len() * d * d, d * d);
    for (i, (r, m)) in rep.iter().zip(member).enumerate() {
        // vec(M T − T R) = (I⊗M − Rᵀ⊗I) vec(T)
        let k = kron(&id, m) - kron(&r.transpose(), &id);
        stacked.view_mut((i * d * d, 0), (d * d, d * d)).copy_from(&k);
    }
    // Tolerance relative to the blocks themselves: the system can be tiny
    // when the two blocks agree to rounding.
    let scale = rep.iter().chain(member).map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
    let null = nullspace_abs(&stacked, tol * scale);
    let v = null.first()?;
    let mut t = CMatrix::from_iterator(d, d, v.iter().cloned());
    let scale = ((t.adjoint() * &t).trace().re / d as f64).sqrt();
    if scale <= 0.0 {
        return None;
    }
    t /= c64(scale, 0.0);
    if unitarity_deviation(&t) > 1e-6 {
        return None;
    }
    let residual = rep
        .iter()
        .zip(member)
        .map(|(r, m)| (&t * r - m * &t).norm())
        .fold(0.0, f64::max);
    let scale_m = member.iter().chain(rep).map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
    if residual > 1e-6 * scale_m {
        return None;
    }
    if let Some(z) = t.transpose().iter().find(|z| z.norm() > 1e-8).copied() {
        t *= z.conj() / z.norm();
    }
    Some(t)
}
