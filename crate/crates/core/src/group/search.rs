//! Search for the smallest group whose irreps cover the required blocks.
//!
//! Block classes come from the block diagonalization as `(dimension,
//! multiplicity)` pairs. A group of order `N` is admissible when it has one
//! inequivalent irrep per class, all sharing one factor system. Since
//! `|G| = Σ d_λ²`, the search starts at `N₀ = Σ_classes d²` and only visits
//! orders divisible by every required dimension. Blocks may also be merged:
//! a set of blocks can be served by a single irrep of the summed dimension.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::catalog::Catalog;
use super::extension::{central_cyclic_subgroups, projective_irreps_with, ProjectiveFamily};
use super::{FactorSystem, FiniteGroup, Representation};

/// Cap on distinct block mergings explored before giving up on coarsening.
const MAX_COARSENINGS: usize = 20_000;

/// Blocks served by one irrep: one block from each listed class (classes may
/// repeat), realized `multiplicity` times.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SlotType {
    pub classes: Vec<usize>,
    pub multiplicity: usize,
}

/// A partition of the blocks into irrep slots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Coarsening {
    pub types: Vec<SlotType>,
}

impl Coarsening {
    /// One slot type per class.
    pub fn finest(class_dims: &[(usize, usize)]) -> Self {
        Self {
            types: class_dims
                .iter()
                .enumerate()
                .map(|(c, &(_, m))| SlotType {
                    classes: vec![c],
                    multiplicity: m,
                })
                .collect(),
        }
    }

    pub fn dims(&self, class_dims: &[(usize, usize)]) -> Vec<usize> {
        self.types
            .iter()
            .map(|t| t.classes.iter().map(|&c| class_dims[c].0).sum())
            .collect()
    }

    /// Lower bound `Σ d²` over the distinct irreps this coarsening needs.
    pub fn n0(&self, class_dims: &[(usize, usize)]) -> usize {
        self.dims(class_dims).iter().map(|d| d * d).sum()
    }

    pub fn is_finest(&self) -> bool {
        self.types.iter().all(|t| t.classes.len() == 1)
    }

    fn canonical(mut types: Vec<SlotType>) -> Self {
        let mut merged: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for t in types.drain(..) {
            if t.multiplicity > 0 {
                *merged.entry(t.classes).or_default() += t.multiplicity;
            }
        }
        Self {
            types: merged
                .into_iter()
                .map(|(classes, multiplicity)| SlotType { classes, multiplicity })
                .collect(),
        }
    }

    /// Merging one pair of slots, or every available pair at once.
    fn neighbours(&self) -> Vec<Coarsening> {
        let mut out = Vec::new();
        let t = self.types.len();
        for i in 0..t {
            for j in i..t {
                let (mi, mj) = (self.types[i].multiplicity, self.types[j].multiplicity);
                let most = if i == j { mi / 2 } else { mi.min(mj) };
                if most == 0 {
                    continue;
                }
                let mut counts = vec![1];
                if most > 1 {
                    counts.push(most);
                }
                for k in counts {
                    let mut types = self.types.clone();
                    if i == j {
                        types[i].multiplicity -= 2 * k;
                    } else {
                        types[i].multiplicity -= k;
                        types[j].multiplicity -= k;
                    }
                    let mut classes = self.types[i].classes.clone();
                    classes.extend_from_slice(&self.types[j].classes);
                    classes.sort_unstable();
                    types.push(SlotType { classes, multiplicity: k });
                    out.push(Self::canonical(types));
                }
            }
        }
        out
    }
}

/// The extension a projective candidate was read off from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionInfo {
    pub name: String,
    pub order: usize,
    pub r: usize,
    pub generator: usize,
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub group: Arc<FiniteGroup>,
    pub factor_system: FactorSystem,
    /// One irrep per slot type of `coarsening`, in type order.
    pub irreps: Vec<Representation>,
    pub coarsening: Coarsening,
    pub extension: Option<ExtensionInfo>,
    pub abelian: bool,
    /// Number of inequivalent irreps sharing the factor system.
    pub irrep_count: usize,
    /// Catalog position of the group (or of its identified quotient).
    pub catalog_index: usize,
}

impl Candidate {
    pub fn order(&self) -> usize {
        self.group.order()
    }

    pub fn is_projective(&self) -> bool {
        self.extension.is_some()
    }

    fn rank_key(&self) -> (bool, usize, bool, usize, usize, usize, usize) {
        let (ext_order, ext_gen) = self
            .extension
            .as_ref()
            .map(|e| (e.order, e.generator))
            .unwrap_or((0, 0));
        (
            !self.abelian,
            self.irrep_count,
            self.is_projective(),
            self.catalog_index,
            ext_order,
            ext_gen,
            self.coarsening.types.len(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// `Σ d²` over the unmerged classes.
    pub n0: usize,
    /// Order of the winning candidates, `None` when the search fell back.
    pub order: Option<usize>,
    /// Ranked best-first.
    pub candidates: Vec<Candidate>,
    pub warnings: Vec<String>,
}

impl SearchOutcome {
    pub fn is_fallback(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Searches orders `N₀ ..= d_a²`; see the module docs.
pub fn search_group(
    class_dims: &[(usize, usize)],
    d_a: usize,
    catalog: &Catalog,
    allow_projective: bool,
) -> Result<SearchOutcome> {
    let total: usize = class_dims.iter().map(|(d, m)| d * m).sum();
    if total != d_a || class_dims.iter().any(|&(d, m)| d == 0 || m == 0) {
        return Err(Error::Validation(format!(
            "block classes {class_dims:?} do not tile dimension {d_a}"
        )));
    }
    let finest = Coarsening::finest(class_dims);
    let n0 = finest.n0(class_dims);
    let mut warnings = Vec::new();
    let mut discovered: BTreeSet<Coarsening> = BTreeSet::from([finest]);
    let mut expanded: BTreeSet<Coarsening> = BTreeSet::new();
    let mut truncated = false;
    let mut incomplete: BTreeSet<usize> = BTreeSet::new();
    let mut families: HashMap<(usize, usize), Option<(ProjectiveFamily, usize)>> = HashMap::new();

    for n in n0..=d_a * d_a {
        // Admit every merging whose own lower bound fits under n.
        loop {
            let ready: Vec<Coarsening> = discovered
                .iter()
                .filter(|c| c.n0(class_dims) <= n && !expanded.contains(*c))
                .cloned()
                .collect();
            if ready.is_empty() {
                break;
            }
            for c in ready {
                for next in c.neighbours() {
                    if discovered.len() >= MAX_COARSENINGS {
                        truncated = true;
                        break;
                    }
                    discovered.insert(next);
                }
                expanded.insert(c);
            }
        }
        let mut active: Vec<&Coarsening> = discovered.iter().filter(|c| c.n0(class_dims) <= n).collect();
        active.sort_by_key(|c| (c.n0(class_dims), (*c).clone()));

        let mut found: Vec<Candidate> = Vec::new();
        for coarsening in active {
            let dims = coarsening.dims(class_dims);
            if dims.iter().any(|d| n % d != 0) {
                continue;
            }
            if n > catalog.complete_up_to() {
                incomplete.insert(n);
            }
            ordinary_candidates(n, coarsening, &dims, catalog, &mut found)?;
            if allow_projective && dims.iter().all(|&d| d > 1) {
                for r in (2..=n).filter(|r| n % r == 0) {
                    if r * n > catalog.complete_up_to() {
                        incomplete.insert(n);
                    }
                    projective_candidates(n, r, coarsening, &dims, catalog, &mut families, &mut found)?;
                }
            }
        }
        if !found.is_empty() {
            found.sort_by_key(|c| c.rank_key());
            push_incompleteness(&mut warnings, &incomplete, Some(n), catalog);
            if truncated {
                warnings.push(format!("block-merging enumeration truncated at {MAX_COARSENINGS} states"));
            }
            return Ok(SearchOutcome {
                n0,
                order: Some(n),
                candidates: found,
                warnings,
            });
        }
    }
    push_incompleteness(&mut warnings, &incomplete, None, catalog);
    if truncated {
        warnings.push(format!("block-merging enumeration truncated at {MAX_COARSENINGS} states"));
    }
    Ok(SearchOutcome {
        n0,
        order: None,
        candidates: Vec::new(),
        warnings,
    })
}

/// Distinct irrep indices with dimensions `dims`, chosen first-fit.
fn assign(dims: &[usize], irreps: &[Representation]) -> Option<Vec<usize>> {
    let mut used = vec![false; irreps.len()];
    dims.iter()
        .map(|&d| {
            let i = (0..irreps.len()).find(|&i| !used[i] && irreps[i].dim() == d)?;
            used[i] = true;
            Some(i)
        })
        .collect()
}

fn ordinary_candidates(
    n: usize,
    coarsening: &Coarsening,
    dims: &[usize],
    catalog: &Catalog,
    found: &mut Vec<Candidate>,
) -> Result<()> {
    for (index, entry) in catalog.of_order(n) {
        let group = entry.group();
        let abelian = group.is_abelian();
        if abelian && dims.iter().any(|&d| d > 1) {
            continue;
        }
        if dims.len() > group.conjugacy_classes().len() {
            continue;
        }
        let irreps = entry.irreps()?;
        if let Some(pick) = assign(dims, irreps) {
            found.push(Candidate {
                group: group.clone(),
                factor_system: FactorSystem::trivial(n),
                irreps: pick.iter().map(|&i| irreps[i].clone()).collect(),
                coarsening: coarsening.clone(),
                extension: None,
                abelian,
                irrep_count: irreps.len(),
                catalog_index: index,
            });
        }
    }
    Ok(())
}

fn projective_candidates(
    n: usize,
    r: usize,
    coarsening: &Coarsening,
    dims: &[usize],
    catalog: &Catalog,
    families: &mut HashMap<(usize, usize), Option<(ProjectiveFamily, usize)>>,
    found: &mut Vec<Candidate>,
) -> Result<()> {
    for (l_index, entry) in catalog.of_order(r * n) {
        let l = entry.group();
        if l.is_abelian() {
            continue;
        }
        for k in central_cyclic_subgroups(l, r) {
            let key = (l_index, k.generator);
            if !families.contains_key(&key) {
                let family = projective_irreps_with(l, k, entry.irreps()?)?;
                let value = (!family.irreps.is_empty()).then(|| named_family(family, catalog));
                families.insert(key, value);
            }
            let Some((family, quotient_index)) = &families[&key] else {
                continue;
            };
            if let Some(pick) = assign(dims, &family.irreps) {
                found.push(Candidate {
                    group: family.quotient.clone(),
                    factor_system: family.factor_system.clone(),
                    irreps: pick.iter().map(|&i| family.irreps[i].clone()).collect(),
                    coarsening: coarsening.clone(),
                    extension: Some(ExtensionInfo {
                        name: l.name().to_string(),
                        order: l.order(),
                        r,
                        generator: k.generator,
                    }),
                    abelian: family.quotient.is_abelian(),
                    irrep_count: family.irreps.len(),
                    catalog_index: *quotient_index,
                });
            }
        }
    }
    Ok(())
}

/// Renames the quotient after its catalog isomorphism class.
fn named_family(mut family: ProjectiveFamily, catalog: &Catalog) -> (ProjectiveFamily, usize) {
    let (index, name) = match catalog.identify(&family.quotient) {
        Some((i, e)) => (i, e.name().to_string()),
        None => (usize::MAX, family.quotient.name().to_string()),
    };
    let renamed = Arc::new(FiniteGroup::clone(&family.quotient).with_name(name));
    for rep in family.irreps.iter_mut().chain(family.raw_irreps.iter_mut()) {
        rep.group = renamed.clone();
    }
    family.quotient = renamed;
    (family, index)
}

fn push_incompleteness(warnings: &mut Vec<String>, incomplete: &BTreeSet<usize>, below: Option<usize>, catalog: &Catalog) {
    let orders: Vec<usize> = incomplete
        .iter()
        .copied()
        .filter(|&n| below.is_none_or(|b| n < b))
        .collect();
    if orders.is_empty() {
        return;
    }
    warnings.push(format!(
        "catalog is complete only up to order {} (max order {}); orders {} were searched against named families only",
        catalog.complete_up_to(),
        catalog.max_order(),
        compress(&orders)
    ));
}

/// `[5, 6, 7, 9]` → `"5-7, 9"`.
fn compress(values: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[j] + 1 {
            j += 1;
        }
        parts.push(if i == j {
            values[i].to_string()
        } else {
            format!("{}-{}", values[i], values[j])
        });
        i = j + 1;
    }
    parts.join(", ")
}
