//! Regular representations and their decomposition into irreps.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::Result;
use crate::linalg::{c64, random_hermitian, rng_from_seed, CMatrix};
use crate::sbd::{classify_equivalence, finest_sbd_sampled};
use crate::tolerance::EPS_BLOCK;

use super::{FactorSystem, FiniteGroup, Representation};

/// `R(f) = Σ_g μ(g,f)|g⟩⟨gf|`.
pub fn regular_representation(g: &FiniteGroup, mu: &FactorSystem) -> Result<Representation> {
    mu.validate(g)?;
    let mats = regular_matrices(g, mu);
    Representation::new(Arc::new(g.clone()), mu.clone(), mats)
}

fn regular_matrices(g: &FiniteGroup, mu: &FactorSystem) -> Vec<CMatrix> {
    let n = g.order();
    (0..n)
        .map(|f| {
            let mut m = CMatrix::zeros(n, n);
            for x in 0..n {
                m[(x, g.mul(x, f))] = mu.mu(x, f);
            }
            m
        })
        .collect()
}

/// One representative per class of irreducible constituents of the regular
/// representation, ordered by dimension and then by character values
/// (descending, so the trivial irrep comes first).
pub fn irreps_of(g: &FiniteGroup, mu: &FactorSystem, seed: u64) -> Result<Vec<Representation>> {
    mu.validate(g)?;
    let group = Arc::new(g.clone());
    let n = g.order();
    let regular = regular_matrices(g, mu);
    let gens = g.generators();
    let mats: Vec<CMatrix> = if gens.is_empty() {
        vec![regular[g.identity()].clone()]
    } else {
        gens.iter().map(|&f| regular[f].clone()).collect()
    };

    // Averaging over the group projects onto the commutant directly, which is
    // far cheaper than solving for it at these sizes.
    let mut rng = rng_from_seed(seed);
    let bs = finest_sbd_sampled(&mats, EPS_BLOCK, &mut rng, |rng| {
        let y = random_hermitian(n, rng);
        regular
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, r| acc + r * &y * r.adjoint())
    })?;
    let bs = classify_equivalence(&bs, &mats, EPS_BLOCK);

    let transformed: Vec<CMatrix> = regular.iter().map(|r| bs.transform(r)).collect();
    let mut irreps = Vec::with_capacity(bs.classes.len());
    for class in &bs.classes {
        let block = class.representative();
        let mats = transformed.iter().map(|t| bs.block_of(t, block)).collect();
        irreps.push(Representation::new(group.clone(), mu.clone(), mats)?);
    }
    irreps.sort_by(compare_irreps);
    Ok(irreps)
}

fn compare_irreps(a: &Representation, b: &Representation) -> Ordering {
    a.dim().cmp(&b.dim()).then_with(|| {
        for (x, y) in a.characters().iter().zip(b.characters()) {
            if (x.re - y.re).abs() > 1e-9 {
                return y.re.total_cmp(&x.re);
            }
            if (x.im - y.im).abs() > 1e-9 {
                return y.im.total_cmp(&x.im);
            }
        }
        Ordering::Equal
    })
}

/// Sum of squared dimensions, `Σ_λ d_λ²`.
pub fn dimension_sum(irreps: &[Representation]) -> usize {
    irreps.iter().map(|r| r.dim() * r.dim()).sum()
}

/// Character inner product `(1/|G|) Σ_f conj(χ_a(f)) χ_b(f)`.
pub fn character_inner(a: &Representation, b: &Representation) -> num_complex::Complex64 {
    let n = a.matrices.len() as f64;
    a.characters()
        .iter()
        .zip(b.characters())
        .map(|(x, y)| x.conj() * y)
        .sum::<num_complex::Complex64>()
        / c64(n, 0.0)
}
