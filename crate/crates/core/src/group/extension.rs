//! Central extensions and the projective irreps they induce.
//!
//! A normalized factor system with phases `ω_r^{n(f,g)}` defines the group
//! `L = Z_r × G` with `(l,f)(m,g) = (l+m+n(f,g), fg)`. Conversely, ordinary
//! irreps `D` of an extension `L` with `D(z) = ω_r·I` on a central generator
//! `z` restrict to projective irreps of `G = L/⟨z⟩` on coset representatives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gates::{pauli_x, pauli_y, pauli_z};
use crate::linalg::{identity, root_of_unity, CMatrix};

use super::{irreps_of, FactorSystem, FiniteGroup, Representation};

/// `L` with element `(m, g)` at index `m·|G| + g`.
pub fn central_extension(g: &FiniteGroup, exponents: &[u32], r: u32) -> Result<FiniteGroup> {
    let n = g.order();
    if r == 0 {
        return Err(Error::Validation("extension order r must be positive".into()));
    }
    if exponents.len() != n * n {
        return Err(Error::Validation(format!(
            "exponent table has {} entries, expected {}",
            exponents.len(),
            n * n
        )));
    }
    let r = r as usize;
    let e = g.identity();
    FiniteGroup::from_fn(format!("{}.C{r}", g.name()), r * n, e, |x, y| {
        let (l, f) = (x / n, x % n);
        let (m, h) = (y / n, y % n);
        ((l + m + exponents[f * n + h] as usize) % r) * n + g.mul(f, h)
    })
    .map_err(|err| Error::Validation(format!("exponent table is not a normalized cocycle: {err}")))
}

/// Exponents (mod 4) of `I, Z, X, Y` on `C2 × C2` from [`super::builders::abelian`]`(&[2, 2])`.
pub fn pauli_factor_system(v4: &FiniteGroup) -> FactorSystem {
    let mats = [identity(2), pauli_z(), pauli_x(), pauli_y()];
    FactorSystem::from_matrices(v4, &mats, 4).expect("Pauli phases are powers of i")
}

/// A cyclic central subgroup `⟨generator⟩` of order `order`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CentralCyclic {
    pub generator: usize,
    pub order: usize,
}

impl CentralCyclic {
    pub fn validate(&self, l: &FiniteGroup) -> Result<()> {
        if self.generator >= l.order() {
            return Err(Error::Validation(format!("generator {} out of range", self.generator)));
        }
        if let Some(g) = (0..l.order()).find(|&g| !l.commutes(self.generator, g)) {
            return Err(Error::Validation(format!(
                "subgroup is not central: generator {} does not commute with {g}",
                self.generator
            )));
        }
        let k = l.element_order(self.generator);
        if k != self.order {
            return Err(Error::Validation(format!(
                "generator has order {k}, expected a cyclic subgroup of order {}",
                self.order
            )));
        }
        Ok(())
    }

    /// Elements `z^m`, `m = 0..order`.
    pub fn elements(&self, l: &FiniteGroup) -> Vec<usize> {
        (0..self.order).map(|m| l.power(self.generator, m)).collect()
    }
}

/// Every central element of order `r`, as generator data.
pub fn central_cyclic_subgroups(l: &FiniteGroup, r: usize) -> Vec<CentralCyclic> {
    l.center()
        .into_iter()
        .filter(|&z| l.element_order(z) == r)
        .map(|z| CentralCyclic { generator: z, order: r })
        .collect()
}

/// Projective irreps of `G = L/K` sharing one factor system.
#[derive(Clone, Debug)]
pub struct ProjectiveFamily {
    pub quotient: Arc<FiniteGroup>,
    /// Coset representative in `L` of each element of `G`.
    pub lifts: Vec<usize>,
    /// Factor system of `g ↦ D(lift g)`; powers of `ω_r`.
    pub raw_factor_system: FactorSystem,
    pub raw_irreps: Vec<Representation>,
    /// Equivalent normalized factor system used by the expansion.
    pub factor_system: FactorSystem,
    pub irreps: Vec<Representation>,
}

/// Runs the ordinary irrep extraction on `l` first.
pub fn projective_irreps_from_extension(l: &FiniteGroup, k: CentralCyclic, seed: u64) -> Result<ProjectiveFamily> {
    let l_irreps = irreps_of(l, &FactorSystem::trivial(l.order()), seed)?;
    projective_irreps_with(l, k, &l_irreps)
}

/// Same, reusing precomputed ordinary irreps of `l`.
pub fn projective_irreps_with(l: &FiniteGroup, k: CentralCyclic, l_irreps: &[Representation]) -> Result<ProjectiveFamily> {
    k.validate(l)?;
    let r = k.order;
    let z_powers = k.elements(l);
    let mut log = vec![usize::MAX; l.order()];
    for (m, &x) in z_powers.iter().enumerate() {
        log[x] = m;
    }

    // Cosets ordered by smallest member; the lift is that member.
    let mut coset_of = vec![usize::MAX; l.order()];
    let mut lifts = Vec::new();
    for x in 0..l.order() {
        if coset_of[x] != usize::MAX {
            continue;
        }
        for &zm in &z_powers {
            coset_of[l.mul(x, zm)] = lifts.len();
        }
        lifts.push(x);
    }
    // The identity coset is lifted to the identity itself.
    lifts[coset_of[l.identity()]] = l.identity();
    let n = lifts.len();
    let quotient = FiniteGroup::from_fn(format!("{}/C{r}", l.name()), n, coset_of[l.identity()], |a, b| {
        coset_of[l.mul(lifts[a], lifts[b])]
    })?;

    // lift(a)·lift(b) = z^m · lift(ab)
    let mut exps = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let prod = l.mul(lifts[a], lifts[b]);
            let zm = l.mul(prod, l.inv(lifts[coset_of[prod]]));
            exps.push(log[zm] as u32);
        }
    }
    let raw = FactorSystem::from_exponents(n, r as u32, exps)?;
    let (normalized, c) = raw.normalized(&quotient)?;
    let quotient = Arc::new(quotient);

    let target = root_of_unity(r as u32, 1);
    let mut raw_irreps = Vec::new();
    let mut irreps = Vec::new();
    for d in l_irreps {
        let dz = &d.matrices[k.generator];
        let expected = identity(d.dim()) * target;
        if (dz - expected).norm() > 1e-6 {
            continue;
        }
        let mats: Vec<CMatrix> = lifts.iter().map(|&x| d.matrices[x].clone()).collect();
        let rep = Representation::new(quotient.clone(), raw.clone(), mats)?;
        irreps.push(rep.rephased(&c, normalized.clone())?);
        raw_irreps.push(rep);
    }
    Ok(ProjectiveFamily {
        quotient,
        lifts,
        raw_factor_system: raw,
        raw_irreps,
        factor_system: normalized,
        irreps,
    })
}
