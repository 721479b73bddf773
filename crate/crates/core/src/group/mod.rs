//! Finite groups given by multiplication tables, factor systems and
//! (projective) unitary representations.
//!
//! A projective representation satisfies `U(f)U(g) = μ(f,g)U(fg)`; the phases
//! `μ` obey the cocycle identity `μ(f,g)μ(fg,h) = μ(f,gh)μ(g,h)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, root_of_unity, unitarity_deviation, CMatrix};
use crate::tolerance::EPS_NUM;

pub mod builders;
pub mod catalog;
pub mod extension;
pub mod io;
pub mod irreps;
pub mod iso;
pub mod search;

pub use extension::{central_extension, projective_irreps_from_extension, CentralCyclic, ProjectiveFamily};
pub use irreps::{irreps_of, regular_representation};

/// A finite group as a multiplication table; `table[f·order + g]` is `fg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    table: Vec<usize>,
    identity: usize,
    inverses: Vec<usize>,
}

impl FiniteGroup {
    /// Validates closure, identity, inverses and associativity, reporting
    /// the first violation found.
    pub fn from_table(name: impl Into<String>, order: usize, table: Vec<usize>, identity: usize) -> Result<Self> {
        let name = name.into();
        if order == 0 {
            return Err(Error::Validation(format!("{name}: order must be positive")));
        }
        if table.len() != order * order {
            return Err(Error::Validation(format!(
                "{name}: table has {} entries, expected {}",
                table.len(),
                order * order
            )));
        }
        if identity >= order {
            return Err(Error::Validation(format!("{name}: identity index {identity} out of range")));
        }
        let at = |f: usize, g: usize| table[f * order + g];
        for f in 0..order {
            for g in 0..order {
                if at(f, g) >= order {
                    return Err(Error::Validation(format!(
                        "{name}: closure fails at (f, g) = ({f}, {g}): entry {}",
                        at(f, g)
                    )));
                }
            }
        }
        for g in 0..order {
            if at(identity, g) != g || at(g, identity) != g {
                return Err(Error::Validation(format!("{name}: identity fails at g = {g}")));
            }
        }
        let mut inverses = Vec::with_capacity(order);
        for f in 0..order {
            match (0..order).find(|&g| at(f, g) == identity) {
                Some(g) if at(g, f) == identity => inverses.push(g),
                _ => return Err(Error::Validation(format!("{name}: element {f} has no two-sided inverse"))),
            }
        }
        for f in 0..order {
            for g in 0..order {
                let fg = at(f, g);
                for h in 0..order {
                    if at(fg, h) != at(f, at(g, h)) {
                        return Err(Error::Validation(format!(
                            "{name}: associativity fails at (f, g, h) = ({f}, {g}, {h})"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            name,
            order,
            table,
            identity,
            inverses,
        })
    }

    /// Table from a multiplication closure on `0..order`.
    pub fn from_fn(name: impl Into<String>, order: usize, identity: usize, mul: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let mut table = Vec::with_capacity(order * order);
        for f in 0..order {
            for g in 0..order {
                table.push(mul(f, g));
            }
        }
        Self::from_table(name, order, table, identity)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn inverses(&self) -> &[usize] {
        &self.inverses
    }

    #[inline]
    pub fn mul(&self, f: usize, g: usize) -> usize {
        self.table[f * self.order + g]
    }

    #[inline]
    pub fn inv(&self, f: usize) -> usize {
        self.inverses[f]
    }

    pub fn power(&self, f: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, f))
    }

    pub fn element_order(&self, f: usize) -> usize {
        let mut x = f;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, f);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|f| (0..f).all(|g| self.mul(f, g) == self.mul(g, f)))
    }

    pub fn commutes(&self, f: usize, g: usize) -> bool {
        self.mul(f, g) == self.mul(g, f)
    }

    pub fn center(&self) -> Vec<usize> {
        (0..self.order)
            .filter(|&z| (0..self.order).all(|g| self.commutes(z, g)))
            .collect()
    }

    /// Conjugacy classes, each sorted, ordered by smallest element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for f in 0..self.order {
            if seen[f] {
                continue;
            }
            let class: BTreeSet<usize> = (0..self.order)
                .map(|g| self.mul(self.mul(g, f), self.inv(g)))
                .collect();
            for &c in &class {
                seen[c] = true;
            }
            classes.push(class.into_iter().collect());
        }
        classes
    }

    /// Sorted elements of the subgroup generated by `gens`.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.order];
        member[self.identity] = true;
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !member[y] {
                    member[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.order).filter(|&x| member[x]).collect()
    }

    /// A small generating set: repeatedly adds the highest-order element
    /// outside the current subgroup (smallest index on ties).
    pub fn generators(&self) -> Vec<usize> {
        let orders: Vec<usize> = (0..self.order).map(|f| self.element_order(f)).collect();
        let mut gens = Vec::new();
        let mut sub = vec![self.identity];
        while sub.len() < self.order {
            let inside: BTreeSet<usize> = sub.iter().copied().collect();
            let next = (0..self.order)
                .filter(|f| !inside.contains(f))
                .max_by(|&a, &b| orders[a].cmp(&orders[b]).then(b.cmp(&a)))
                .expect("proper subgroup has an outside element");
            gens.push(next);
            sub = self.generated_subgroup(&gens);
        }
        gens
    }

    /// `self × other` with element `(i, j)` at index `i·|other| + j`.
    pub fn direct_product(&self, other: &FiniteGroup, name: impl Into<String>) -> FiniteGroup {
        let m = other.order;
        FiniteGroup::from_fn(name, self.order * m, self.identity * m + other.identity, |x, y| {
            self.mul(x / m, y / m) * m + other.mul(x % m, y % m)
        })
        .expect("direct product of groups is a group")
    }
}

/// Unit-modulus phases `μ(f,g)`. When `root_order = r > 0` every phase is a
/// power of `ω_r = e^{2πi/r}` and the integer exponents are kept exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSystem {
    order: usize,
    root_order: u32,
    exponents: Option<Vec<u32>>,
    phases: Vec<Complex64>,
}

impl FactorSystem {
    pub fn trivial(order: usize) -> Self {
        Self {
            order,
            root_order: 1,
            exponents: Some(vec![0; order * order]),
            phases: vec![c64(1.0, 0.0); order * order],
        }
    }

    /// `μ(f,g) = ω_r^{n(f,g)}` with `n` row-major, reduced mod `r`.
    pub fn from_exponents(order: usize, root_order: u32, exponents: Vec<u32>) -> Result<Self> {
        if root_order == 0 {
            return Err(Error::Validation("root order must be positive for an exponent table".into()));
        }
        if exponents.len() != order * order {
            return Err(Error::Validation(format!(
                "exponent table has {} entries, expected {}",
                exponents.len(),
                order * order
            )));
        }
        let exponents: Vec<u32> = exponents.into_iter().map(|n| n % root_order).collect();
        let phases = exponents
            .iter()
            .map(|&n| root_of_unity(root_order, n as i64))
            .collect();
        Ok(Self {
            order,
            root_order,
            exponents: Some(exponents),
            phases,
        })
    }

    /// Arbitrary unit-modulus phases (`root_order = 0`).
    pub fn from_phases(order: usize, phases: Vec<Complex64>) -> Result<Self> {
        if phases.len() != order * order {
            return Err(Error::Validation(format!(
                "phase table has {} entries, expected {}",
                phases.len(),
                order * order
            )));
        }
        if let Some(p) = phases.iter().find(|p| (p.norm() - 1.0).abs() > EPS_NUM) {
            return Err(Error::Validation(format!("phase {p} is not unit modulus")));
        }
        Ok(Self {
            order,
            root_order: 0,
            exponents: None,
            phases,
        })
    }

    /// Reads the factor system of a projective representation off its
    /// matrices, snapping phases to powers of `ω_r`.
    pub fn from_matrices(group: &FiniteGroup, mats: &[CMatrix], root_order: u32) -> Result<Self> {
        let n = group.order();
        let d = mats[0].nrows() as f64;
        let mut exps = Vec::with_capacity(n * n);
        for f in 0..n {
            for g in 0..n {
                let lhs = &mats[f] * &mats[g];
                let mu = (mats[group.mul(f, g)].adjoint() * lhs).trace() / d;
                let k = (mu.arg() * root_order as f64 / (2.0 * std::f64::consts::PI)).round() as i64;
                let k = k.rem_euclid(root_order as i64);
                if (mu - root_of_unity(root_order, k)).norm() > 1e-6 {
                    return Err(Error::Validation(format!(
                        "phase μ({f},{g}) = {mu} is not a power of ω_{root_order}"
                    )));
                }
                exps.push(k as u32);
            }
        }
        Self::from_exponents(n, root_order, exps)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    pub fn exponents(&self) -> Option<&[u32]> {
        self.exponents.as_deref()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    #[inline]
    pub fn mu(&self, f: usize, g: usize) -> Complex64 {
        self.phases[f * self.order + g]
    }

    pub fn exponent(&self, f: usize, g: usize) -> Option<u32> {
        self.exponents.as_ref().map(|e| e[f * self.order + g])
    }

    pub fn is_trivial(&self) -> bool {
        self.phases.iter().all(|p| (p - c64(1.0, 0.0)).norm() <= EPS_NUM)
    }

    /// Checks unit modulus and the cocycle identity against `group`.
    pub fn validate(&self, group: &FiniteGroup) -> Result<()> {
        let n = group.order();
        if self.order != n {
            return Err(Error::Validation(format!(
                "factor system is for order {}, group has order {n}",
                self.order
            )));
        }
        for f in 0..n {
            for g in 0..n {
                let fg = group.mul(f, g);
                for h in 0..n {
                    let lhs = self.mu(f, g) * self.mu(fg, h);
                    let rhs = self.mu(f, group.mul(g, h)) * self.mu(g, h);
                    if (lhs - rhs).norm() > EPS_NUM {
                        return Err(Error::Validation(format!(
                            "cocycle identity fails at (f, g, h) = ({f}, {g}, {h})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `μ(e,g) = μ(g,e) = μ(g,g⁻¹) = 1` for all `g`.
    pub fn is_normalized(&self, group: &FiniteGroup) -> bool {
        let one = c64(1.0, 0.0);
        let e = group.identity();
        (0..group.order()).all(|g| {
            (self.mu(e, g) - one).norm() <= EPS_NUM
                && (self.mu(g, e) - one).norm() <= EPS_NUM
                && (self.mu(g, group.inv(g)) - one).norm() <= EPS_NUM
        })
    }

    /// Equivalent normalized factor system and the rephasing `c` with
    /// `c(f)U(f)` realizing it. Requires `μ(e,·) = μ(·,e) = 1`.
    pub fn normalized(&self, group: &FiniteGroup) -> Result<(FactorSystem, Vec<Complex64>)> {
        self.validate(group)?;
        let n = group.order();
        let e = group.identity();
        let one = c64(1.0, 0.0);
        if (0..n).any(|g| (self.mu(e, g) - one).norm() > EPS_NUM || (self.mu(g, e) - one).norm() > EPS_NUM) {
            return Err(Error::Validation("factor system is not normalized at the identity".into()));
        }
        match &self.exponents {
            Some(exps) => {
                let r = self.root_order as u64;
                let r2 = 2 * r;
                // Rephasing exponents in units of ω_{2r}.
                let mut x = vec![0u64; n];
                for f in 0..n {
                    let fi = group.inv(f);
                    if f == e || f > fi {
                        continue;
                    }
                    let nf = exps[f * n + fi] as u64;
                    if f == fi {
                        x[f] = (r - nf % r) % r;
                    } else {
                        x[fi] = (r2 - (2 * nf) % r2) % r2;
                    }
                }
                let mut new = Vec::with_capacity(n * n);
                for f in 0..n {
                    for g in 0..n {
                        let v = 2 * exps[f * n + g] as u64 + x[f] + x[g] + r2 - x[group.mul(f, g)];
                        new.push(v % r2);
                    }
                }
                let mut common = r2;
                for &v in new.iter().chain(x.iter()) {
                    common = gcd(common, v);
                }
                // Reduce ω_{2r}^v to the smallest root order; c keeps ω_{2r}.
                let root = (r2 / common) as u32;
                let reduced = new.iter().map(|&v| (v / common) as u32).collect();
                let c = x.iter().map(|&k| root_of_unity(r2 as u32, k as i64)).collect();
                let fs = FactorSystem::from_exponents(n, root.max(1), reduced)?;
                Ok((fs, c))
            }
            None => {
                let mut c = vec![one; n];
                for f in 0..n {
                    let fi = group.inv(f);
                    if f == e || f > fi {
                        continue;
                    }
                    let m = self.mu(f, fi);
                    if f == fi {
                        c[f] = one / m.sqrt();
                    } else {
                        c[fi] = one / m;
                    }
                }
                let phases = (0..n * n)
                    .map(|k| {
                        let (f, g) = (k / n, k % n);
                        c[f] * c[g] * self.mu(f, g) / c[group.mul(f, g)]
                    })
                    .collect();
                Ok((FactorSystem::from_phases(n, phases)?, c))
            }
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unitary matrices `U(f)` with `U(f)U(g) = μ(f,g)U(fg)`.
#[derive(Clone, Debug)]
pub struct Representation {
    pub group: Arc<FiniteGroup>,
    pub factor_system: FactorSystem,
    pub matrices: Vec<CMatrix>,
}

impl Representation {
    pub fn new(group: Arc<FiniteGroup>, factor_system: FactorSystem, matrices: Vec<CMatrix>) -> Result<Self> {
        factor_system.validate(&group)?;
        if matrices.len() != group.order() {
            return Err(Error::Dimension(format!(
                "{} matrices for a group of order {}",
                matrices.len(),
                group.order()
            )));
        }
        let d = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Dimension("representation matrices differ in size".into()));
        }
        let rep = Self {
            group,
            factor_system,
            matrices,
        };
        let unitarity = rep.unitarity_defect();
        if unitarity > EPS_NUM * (d as f64).max(1.0) {
            return Err(Error::Validation(format!("representation matrix not unitary: {unitarity:.3e}")));
        }
        let defect = rep.projective_defect();
        if defect > EPS_NUM * (d as f64).max(1.0) {
            return Err(Error::Validation(format!(
                "U(f)U(g) = μ(f,g)U(fg) violated by {defect:.3e}"
            )));
        }
        Ok(rep)
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn character(&self, f: usize) -> Complex64 {
        self.matrices[f].trace()
    }

    pub fn characters(&self) -> Vec<Complex64> {
        (0..self.matrices.len()).map(|f| self.character(f)).collect()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.matrices.iter().map(unitarity_deviation).fold(0.0, f64::max)
    }

    /// `max_{f,g} ‖U(f)U(g) − μ(f,g)U(fg)‖_F`.
    pub fn projective_defect(&self) -> f64 {
        let g = &self.group;
        let mut worst: f64 = 0.0;
        for f in 0..g.order() {
            for h in 0..g.order() {
                let lhs = &self.matrices[f] * &self.matrices[h];
                let rhs = &self.matrices[g.mul(f, h)] * self.factor_system.mu(f, h);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }

    /// `f ↦ c(f)U(f)` under a new factor system.
    pub fn rephased(&self, c: &[Complex64], factor_system: FactorSystem) -> Result<Self> {
        let matrices = self.matrices.iter().zip(c).map(|(m, &z)| m * z).collect();
        Self::new(self.group.clone(), factor_system, matrices)
    }
}
