//! Built-in group catalog.
//!
//! Complete (up to isomorphism) for orders 1–16; above that it holds the
//! named families only, so searches there are sound relative to the catalog
//! but not exhaustive.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

use super::builders::{
    abelian, alternating4, c4xc2_semidirect_c2, cyclic, dihedral, heisenberg, metacyclic, pauli16, quaternion8,
    symmetric,
};
use super::iso::{fingerprint, find_isomorphism};
use super::{irreps_of, FactorSystem, FiniteGroup, Representation};

/// Largest order for which every isomorphism class is present.
pub const COMPLETE_UP_TO: usize = 16;

/// Largest dihedral group order in the catalog.
const DIHEDRAL_MAX_ORDER: usize = 32;

/// Seed for catalog irrep extraction; fixed so irrep bases are reproducible.
pub const IRREP_SEED: u64 = 0x5eed;

pub const ENV_CATALOG_DIR: &str = "NLGC_CATALOG_DIR";

#[derive(Debug)]
pub struct CatalogEntry {
    group: Arc<FiniteGroup>,
    aliases: Vec<String>,
    irreps: OnceLock<std::result::Result<Vec<Representation>, String>>,
}

impl CatalogEntry {
    fn new(group: FiniteGroup) -> Self {
        Self {
            group: Arc::new(group),
            aliases: Vec::new(),
            irreps: OnceLock::new(),
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn name(&self) -> &str {
        self.group.name()
    }

    /// Names of isomorphic groups merged into this entry.
    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    /// Ordinary irreps, computed on first use.
    pub fn irreps(&self) -> Result<&[Representation]> {
        self.irreps
            .get_or_init(|| {
                irreps_of(&self.group, &FactorSystem::trivial(self.group.order()), IRREP_SEED)
                    .map_err(|e| e.to_string())
            })
            .as_deref()
            .map_err(|e| Error::Validation(format!("irreps of {}: {e}", self.group.name())))
    }

    pub fn irrep_dims(&self) -> Result<Vec<usize>> {
        Ok(self.irreps()?.iter().map(|r| r.dim()).collect())
    }
}

#[derive(Debug)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
    max_order: usize,
}

impl Catalog {
    pub fn builtin(max_order: usize) -> Self {
        let mut catalog = Self {
            entries: Vec::new(),
            max_order,
        };
        catalog.admit(builtin_candidates(max_order));
        catalog
    }

    /// Adds user tables (orders above `max_order` are ignored).
    pub fn with_groups(mut self, groups: Vec<FiniteGroup>) -> Self {
        self.admit(groups);
        self
    }

    /// Adds every table in `$NLGC_CATALOG_DIR`, if set.
    pub fn with_env(self) -> Result<Self> {
        match std::env::var_os(ENV_CATALOG_DIR) {
            Some(dir) => self.with_dir(Path::new(&dir)),
            None => Ok(self),
        }
    }

    pub fn with_dir(self, dir: &Path) -> Result<Self> {
        let groups = super::io::load_dir(dir)?;
        Ok(self.with_groups(groups))
    }

    fn admit(&mut self, groups: Vec<FiniteGroup>) {
        for g in groups {
            if g.order() > self.max_order {
                continue;
            }
            if let Some(existing) = self.duplicate_of(&g) {
                let entry = &mut self.entries[existing];
                if entry.group.name() != g.name() && !entry.aliases.iter().any(|a| a == g.name()) {
                    entry.aliases.push(g.name().to_string());
                }
                continue;
            }
            // Stable insertion keeps families in construction order per order.
            let pos = self.entries.partition_point(|e| e.group.order() <= g.order());
            self.entries.insert(pos, CatalogEntry::new(g));
        }
    }

    fn duplicate_of(&self, g: &FiniteGroup) -> Option<usize> {
        let mut same_order = self.of_order(g.order());
        if g.order() <= COMPLETE_UP_TO {
            let fp = fingerprint(g);
            same_order
                .filter(|(_, e)| fingerprint(&e.group) == fp)
                .find(|(_, e)| find_isomorphism(g, &e.group).is_some())
                .map(|(i, _)| i)
        } else {
            same_order.find(|(_, e)| e.group.name() == g.name()).map(|(i, _)| i)
        }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn complete_up_to(&self) -> usize {
        COMPLETE_UP_TO.min(self.max_order)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> &CatalogEntry {
        &self.entries[index]
    }

    /// `(catalog index, entry)` for every group of order `n`.
    pub fn of_order(&self, n: usize) -> impl Iterator<Item = (usize, &CatalogEntry)> {
        self.entries
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.group.order() == n)
    }

    /// Case-insensitive lookup by name or alias.
    pub fn find(&self, name: &str) -> Option<(usize, &CatalogEntry)> {
        let matches = |s: &str| s.eq_ignore_ascii_case(name);
        self.entries
            .iter()
            .enumerate()
            .find(|(_, e)| matches(e.name()) || e.aliases.iter().any(|a| matches(a)))
    }

    /// The catalog entry isomorphic to `g`, if any.
    pub fn identify(&self, g: &FiniteGroup) -> Option<(usize, &CatalogEntry)> {
        let fp = fingerprint(g);
        self.of_order(g.order())
            .filter(|(_, e)| fingerprint(&e.group) == fp)
            .find(|(_, e)| find_isomorphism(g, &e.group).is_some())
    }
}

/// Groups of the built-in catalog up to `max_order`, by order, one per
/// isomorphism class up to order 16.
pub fn builtin_catalog(max_order: usize) -> Vec<FiniteGroup> {
    Catalog::builtin(max_order)
        .entries
        .into_iter()
        .map(|e| Arc::unwrap_or_clone(e.group))
        .collect()
}

fn builtin_candidates(max_order: usize) -> Vec<FiniteGroup> {
    let mut out: Vec<FiniteGroup> = (1..=max_order).map(cyclic).collect();

    // Abelian groups with two or three invariant factors n1 | n2 | n3.
    for n1 in 2..=max_order {
        for n2 in (n1..=max_order / n1).filter(|n2| n2 % n1 == 0) {
            out.push(abelian(&[n1, n2]));
            for n3 in (n2..=max_order / (n1 * n2)).filter(|n3| n3 % n2 == 0) {
                out.push(abelian(&[n1, n2, n3]));
            }
        }
    }
    if max_order >= 16 {
        out.push(abelian(&[2, 2, 2, 2]));
    }

    // S3 ahead of D3 so the familiar name is kept.
    if max_order >= 6 {
        out.push(symmetric(3));
    }
    for n in 3..=(DIHEDRAL_MAX_ORDER.min(max_order) / 2) {
        out.push(dihedral(n));
    }
    let named: Vec<(usize, fn() -> FiniteGroup)> = vec![
        (8, quaternion8),
        (8, || heisenberg(2)),
        (12, || metacyclic("Dic3", 6, 2, 3, 5)),
        (12, alternating4),
        (16, || metacyclic("Q16", 8, 2, 4, 7)),
        (16, || metacyclic("SD16", 8, 2, 0, 3)),
        (16, || metacyclic("M16", 8, 2, 0, 5)),
        (16, || metacyclic("C4:C4", 4, 4, 0, 3)),
        (16, c4xc2_semidirect_c2),
        (16, || dihedral(4).direct_product(&cyclic(2), "D4xC2")),
        (16, || quaternion8().direct_product(&cyclic(2), "Q8xC2")),
        (16, pauli16),
        (24, || symmetric(4)),
        (27, || heisenberg(3)),
    ];
    for (order, build) in named {
        if order <= max_order {
            out.push(build());
        }
    }
    out
}
