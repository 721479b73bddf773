//! Assembly of `𝒰 = Σ_f [V·U(f)] ⊗ W(f)` from the block structure and a
//! group found by the search.
//!
//! With `X_k = S†V†A_kS` block diagonal, each irrep block is expanded in the
//! irrep matrices by orthogonality:
//! `𝒲_{kg} = Σ_λ (d_λ/|G|) Tr[U^λ(g⁻¹) X_k^λ]`, and then
//! `W(g) = Σ_k 𝒲_{kg} B_k`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::weyl;
use crate::group::builders::{abelian, cyclic};
use crate::group::catalog::Catalog;
use crate::group::search::{search_group, Candidate, Coarsening, ExtensionInfo};
use crate::group::{FactorSystem, FiniteGroup, Representation};
use crate::linalg::{
    c64, embed, extract, hermitian_eigen, identity, kron, orthonormalize, polar_unitary, rng_from_seed, swap_factors,
    CMatrix, CVector,
};
use crate::protocol::{build_m, check_m_unitary};
use crate::sbd::{classify_equivalence, finest_sbd, gram_set, BlockStructure};
use crate::schmidt::{schmidt_decompose, BipartiteUnitary, SchmidtDecomposition};
use crate::tolerance::{EPS_BLOCK, EPS_NUM, RANK_TOL};

/// Residual above which a compiled expansion is rejected.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Which tensor factor carries the group representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideSelection {
    A,
    B,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    General,
    ControlledUnitary,
    DoubleUnitary,
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    /// Off-block threshold for block detection.
    pub block_tol: f64,
    /// Relative Schmidt cutoff.
    pub rank_tol: f64,
    pub seed: u64,
    pub allow_projective: bool,
    pub sides: SideSelection,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            block_tol: EPS_BLOCK,
            rank_tol: RANK_TOL,
            seed: 0,
            allow_projective: true,
            sides: SideSelection::Both,
        }
    }
}

/// Indices (in the `S` basis) served by one irrep copy. `intertwiner` maps
/// the first copy of the same irrep onto this one.
#[derive(Clone, Debug)]
pub struct Slot {
    pub indices: Vec<usize>,
    pub irrep: usize,
    pub intertwiner: CMatrix,
}

/// Placement of irreps in the block basis.
#[derive(Clone, Debug)]
pub struct IrrepLayout {
    pub basis_change: CMatrix,
    pub irreps: Vec<Representation>,
    pub slots: Vec<Slot>,
}

impl IrrepLayout {
    pub fn dim(&self) -> usize {
        self.basis_change.nrows()
    }

    /// First slot carrying irrep `lambda`.
    pub fn representative_slot(&self, lambda: usize) -> Option<&Slot> {
        self.slots.iter().find(|s| s.irrep == lambda)
    }

    /// `⊕_slots T·U^λ(f)·T†` in the `S` basis.
    pub fn block_matrix(&self, f: usize) -> CMatrix {
        let n = self.dim();
        self.slots.iter().fold(CMatrix::zeros(n, n), |acc, slot| {
            let u = &self.irreps[slot.irrep].matrices[f];
            acc + embed(n, &slot.indices, &(&slot.intertwiner * u * slot.intertwiner.adjoint()))
        })
    }
}

/// Orthogonal projectors `P_j` and targets `𝒱_j` with
/// `𝒰 = (V ⊗ I)·Σ_j P_j ⊗ 𝒱_j` (in the group side's orientation).
#[derive(Clone, Debug)]
pub struct ControlledForm {
    pub projectors: Vec<CMatrix>,
    pub targets: Vec<CMatrix>,
}

/// Outcome of the pipeline on one side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SideAnalysis {
    pub side: Side,
    pub schmidt_rank: usize,
    pub block_sizes: Vec<usize>,
    /// `(dimension, multiplicity)` per class of equivalent blocks.
    pub classes: Vec<(usize, usize)>,
    pub n0: usize,
    pub group: Option<String>,
    pub group_order: Option<usize>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

/// The compiled artifact.
#[derive(Clone, Debug)]
pub struct GroupExpansion {
    pub group: Arc<FiniteGroup>,
    pub factor_system: FactorSystem,
    pub v: CMatrix,
    pub u_ops: Representation,
    pub w_ops: Vec<CMatrix>,
    /// `r × |G|` coefficients against the Schmidt operators `B_j`.
    pub w_coeffs: CMatrix,
    pub side: Side,
    /// Gate in its original orientation.
    pub gate: BipartiteUnitary,
    pub cost_ebits: f64,
    pub baseline_ebits: f64,
    pub classification: Classification,
    pub controlled_form: Option<ControlledForm>,
    pub residual: f64,
    pub fallback: bool,
    pub extension: Option<ExtensionInfo>,
    pub layout: Option<IrrepLayout>,
    pub coarsening: Option<Coarsening>,
    pub schmidt_rank: usize,
    pub analyses: Vec<SideAnalysis>,
    pub warnings: Vec<String>,
}

impl GroupExpansion {
    /// Builds an expansion from its defining data, recomputing residual,
    /// cost and classification.
    pub fn from_parts(
        gate: BipartiteUnitary,
        side: Side,
        v: CMatrix,
        u_ops: Representation,
        w_ops: Vec<CMatrix>,
        w_coeffs: CMatrix,
    ) -> Result<Self> {
        let oriented = orient(&gate, side);
        if v.nrows() != oriented.da() || u_ops.dim() != oriented.da() {
            return Err(Error::Dimension(format!(
                "group-side operators must be {0}x{0}",
                oriented.da()
            )));
        }
        if w_ops.len() != u_ops.group.order() || w_ops.iter().any(|w| w.nrows() != oriented.db() || w.ncols() != oriented.db()) {
            return Err(Error::Dimension(format!(
                "expected {} coefficient operators of size {1}x{1}",
                u_ops.group.order(),
                oriented.db()
            )));
        }
        let residual = (oriented.matrix() - expand(&v, &u_ops.matrices, &w_ops)).norm();
        let schmidt_rank = schmidt_decompose(&gate, RANK_TOL)?.rank();
        let mut exp = Self {
            group: u_ops.group.clone(),
            factor_system: u_ops.factor_system.clone(),
            v,
            u_ops,
            w_ops,
            w_coeffs,
            side,
            cost_ebits: 0.0,
            baseline_ebits: baseline_ebits(gate.da(), gate.db()),
            gate,
            classification: Classification::General,
            controlled_form: None,
            residual,
            fallback: false,
            extension: None,
            layout: None,
            coarsening: None,
            schmidt_rank,
            analyses: Vec::new(),
            warnings: Vec::new(),
        };
        exp.cost_ebits = cost_ebits(exp.group.order());
        let (class, form) = classify(&exp);
        exp.classification = class;
        exp.controlled_form = form;
        Ok(exp)
    }

    /// The gate with the group side first.
    pub fn oriented_gate(&self) -> BipartiteUnitary {
        orient(&self.gate, self.side)
    }

    /// `Σ_f V·U(f) ⊗ W(f)` in the original tensor order.
    pub fn reconstruct(&self) -> CMatrix {
        let m = expand(&self.v, &self.u_ops.matrices, &self.w_ops);
        match self.side {
            Side::A => m,
            Side::B => swap_factors(&m, self.v.nrows(), self.w_ops[0].nrows()),
        }
    }

    pub fn savings_ebits(&self) -> f64 {
        self.baseline_ebits - self.cost_ebits
    }
}

fn orient(gate: &BipartiteUnitary, side: Side) -> BipartiteUnitary {
    match side {
        Side::A => gate.clone(),
        Side::B => gate.swapped(),
    }
}

pub fn cost_ebits(order: usize) -> f64 {
    (order as f64).log2()
}

/// Two-way teleportation: `2·log₂ min(dA, dB)`.
pub fn baseline_ebits(da: usize, db: usize) -> f64 {
    2.0 * (da.min(db) as f64).log2()
}

fn expand(v: &CMatrix, u: &[CMatrix], w: &[CMatrix]) -> CMatrix {
    let n = v.nrows() * w[0].nrows();
    u.iter()
        .zip(w)
        .fold(CMatrix::zeros(n, n), |acc, (uf, wf)| acc + kron(&(v * uf), wf))
}

/// Local unitary `V` with `S†V†A_kS` block diagonal for every `k`.
///
/// In the `S` basis the columns of all `A_k` belonging to block `α` span a
/// subspace of dimension `n_α`, and subspaces of different blocks are
/// orthogonal. `V` maps block `α` onto an orthonormal basis of that
/// subspace; bases of equivalent blocks are rotated so that their blocks of
/// `V†A_k` are related by the class intertwiners.
pub fn construct_v(a_ops: &[CMatrix], bs: &BlockStructure) -> Result<CMatrix> {
    let s = &bs.basis_change;
    let d = bs.dim();
    let a_s: Vec<CMatrix> = a_ops.iter().map(|a| a * s).collect();
    let columns_of = |block: usize| -> Vec<CMatrix> {
        let range = bs.block_range(block);
        a_s.iter().map(|m| m.columns(range.start, range.len()).into_owned()).collect()
    };

    let mut bases: Vec<CMatrix> = Vec::with_capacity(bs.num_blocks());
    for block in 0..bs.num_blocks() {
        let cols: Vec<CVector> = columns_of(block)
            .iter()
            .flat_map(|c| c.column_iter().map(|v| v.into_owned()).collect::<Vec<_>>())
            .collect();
        let basis = orthonormalize(&cols, 1e-8);
        let expected = bs.block_sizes[block];
        if basis.len() != expected {
            return Err(Error::Singular {
                block,
                expected,
                found: basis.len(),
            });
        }
        bases.push(CMatrix::from_columns(&basis));
    }

    for class in &bs.classes {
        let rep = class.representative();
        let rep_blocks: Vec<CMatrix> = columns_of(rep).iter().map(|c| bases[rep].adjoint() * c).collect();
        for (pos, &member) in class.members.iter().enumerate().skip(1) {
            let t = &class.intertwiners[pos];
            let cols = columns_of(member);
            let mut overlap = CMatrix::zeros(t.nrows(), t.nrows());
            for (c, x_rep) in cols.iter().zip(&rep_blocks) {
                let z = bases[member].adjoint() * c * t;
                overlap += z * x_rep.adjoint();
            }
            let omega = polar_unitary(&overlap);
            bases[member] = &bases[member] * omega * t.adjoint();
        }
    }

    let mut vc = CMatrix::zeros(d, d);
    for block in 0..bs.num_blocks() {
        let range = bs.block_range(block);
        vc.columns_mut(range.start, range.len()).copy_from(&bases[block]);
    }
    let v = &vc * s.adjoint();

    let transformed: Vec<CMatrix> = a_ops.iter().map(|a| bs.transform(&(v.adjoint() * a))).collect();
    let scale = a_ops.iter().map(|a| a.norm()).fold(1.0, f64::max);
    let off = off_block(bs, &transformed);
    if off > EPS_BLOCK * scale {
        return Err(Error::Validation(format!(
            "V†A_k keeps off-block magnitude {off:.3e} after construction"
        )));
    }
    Ok(v)
}

fn off_block(bs: &BlockStructure, mats: &[CMatrix]) -> f64 {
    let mut owner = vec![0usize; bs.dim()];
    for b in 0..bs.num_blocks() {
        for i in bs.block_range(b) {
            owner[i] = b;
        }
    }
    let mut worst: f64 = 0.0;
    for m in mats {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if owner[r] != owner[c] {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
    }
    worst
}

/// Slots realizing `coarsening`: each copy of a slot type takes the next
/// unused block of every class it lists.
pub fn slot_layout(bs: &BlockStructure, coarsening: &Coarsening) -> Result<Vec<Slot>> {
    let mut cursor = vec![0usize; bs.classes.len()];
    let mut slots = Vec::new();
    for (lambda, ty) in coarsening.types.iter().enumerate() {
        let mut first: Vec<CMatrix> = Vec::new();
        for copy in 0..ty.multiplicity {
            let mut indices = Vec::new();
            let mut parts = Vec::new();
            for &c in &ty.classes {
                let class = bs.classes.get(c).ok_or_else(|| Error::Assignment(format!("no block class {c}")))?;
                let pos = cursor[c];
                let block = *class.members.get(pos).ok_or_else(|| {
                    Error::Assignment(format!("class {c} has only {} blocks", class.members.len()))
                })?;
                cursor[c] += 1;
                indices.extend(bs.block_range(block));
                parts.push(class.intertwiners[pos].clone());
            }
            if copy == 0 {
                first = parts.clone();
            }
            let size = indices.len();
            let mut t = CMatrix::zeros(size, size);
            let mut at = 0;
            for (p, f) in parts.iter().zip(&first) {
                let k = p.nrows();
                t.view_mut((at, at), (k, k)).copy_from(&(p * f.adjoint()));
                at += k;
            }
            slots.push(Slot {
                indices,
                irrep: lambda,
                intertwiner: t,
            });
        }
    }
    for (c, class) in bs.classes.iter().enumerate() {
        if cursor[c] != class.members.len() {
            return Err(Error::Assignment(format!(
                "class {c}: {} of {} blocks assigned",
                cursor[c],
                class.members.len()
            )));
        }
    }
    Ok(slots)
}

/// `U(f) = S·(⊕_slots T·U^λ(f)·T†)·S†`.
pub fn assemble_u(group: &Arc<FiniteGroup>, mu: &FactorSystem, layout: &IrrepLayout) -> Result<Representation> {
    let n = layout.dim();
    let mut covered = vec![false; n];
    for slot in &layout.slots {
        let irrep = layout
            .irreps
            .get(slot.irrep)
            .ok_or_else(|| Error::Assignment(format!("slot refers to missing irrep {}", slot.irrep)))?;
        if irrep.dim() != slot.indices.len() {
            return Err(Error::Assignment(format!(
                "irrep of dimension {} placed on a block of size {}",
                irrep.dim(),
                slot.indices.len()
            )));
        }
        for &i in &slot.indices {
            if std::mem::replace(&mut covered[i], true) {
                return Err(Error::Assignment(format!("index {i} covered twice")));
            }
        }
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::Assignment("slots do not cover every block".into()));
    }
    let s = &layout.basis_change;
    let mats = (0..group.order())
        .map(|f| s * layout.block_matrix(f) * s.adjoint())
        .collect();
    Representation::new(group.clone(), mu.clone(), mats)
}

/// Coefficients `𝒲` (`r × |G|`) and operators `W(f)`.
pub fn compute_w(
    v: &CMatrix,
    a_ops: &[CMatrix],
    layout: &IrrepLayout,
    b_ops: &[CMatrix],
) -> Result<(CMatrix, Vec<CMatrix>)> {
    let group = layout
        .irreps
        .first()
        .map(|r| r.group.clone())
        .ok_or_else(|| Error::Assignment("no irreps in layout".into()))?;
    let n = group.order();
    let s = &layout.basis_change;
    let x: Vec<CMatrix> = a_ops.iter().map(|a| s.adjoint() * v.adjoint() * a * s).collect();

    let mut coeffs = CMatrix::zeros(a_ops.len(), n);
    for (lambda, irrep) in layout.irreps.iter().enumerate() {
        let Some(slot) = layout.representative_slot(lambda) else {
            continue;
        };
        let weight = c64(irrep.dim() as f64 / n as f64, 0.0);
        for (k, xk) in x.iter().enumerate() {
            let block = extract(xk, &slot.indices);
            for g in 0..n {
                let u_inv = &irrep.matrices[group.inv(g)];
                coeffs[(k, g)] += weight * (u_inv * &block).trace();
            }
        }
    }

    let blocks: Vec<CMatrix> = (0..n).map(|f| layout.block_matrix(f)).collect();
    for (k, xk) in x.iter().enumerate() {
        let recon = blocks
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(xk.nrows(), xk.ncols()), |acc, (g, u)| acc + u * coeffs[(k, g)]);
        let residual = (xk - recon).norm();
        let tol = EPS_NUM * xk.norm().max(1.0);
        if residual > tol {
            return Err(Error::Inconsistent { residual, tol });
        }
    }

    let db = b_ops[0].nrows();
    let w = (0..n)
        .map(|g| {
            b_ops
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(db, db), |acc, (k, b)| acc + b * coeffs[(k, g)])
        })
        .collect();
    Ok((coeffs, w))
}

/// Controlled-unitary when every `U(f)` commutes; double-unitary when the
/// `W(f)` are proportional to unitaries forming a projective representation
/// up to fixed local unitaries; general otherwise.
pub fn classify(exp: &GroupExpansion) -> (Classification, Option<ControlledForm>) {
    let u = &exp.u_ops.matrices;
    let d = exp.u_ops.dim() as f64;
    let commuting = u
        .iter()
        .enumerate()
        .all(|(i, a)| u[..i].iter().all(|b| (a * b - b * a).norm() <= EPS_NUM * d));
    if commuting {
        if let Some(form) = controlled_form(exp) {
            return (Classification::ControlledUnitary, Some(form));
        }
    }
    if is_double_unitary(&exp.group, &exp.w_ops) {
        return (Classification::DoubleUnitary, None);
    }
    (Classification::General, None)
}

fn controlled_form(exp: &GroupExpansion) -> Option<ControlledForm> {
    let u = &exp.u_ops.matrices;
    let da = exp.u_ops.dim();
    // A generic Hermitian combination of commuting normal matrices has the
    // joint eigenspaces as its eigenspaces.
    let mut rng = rng_from_seed(0x0c7d);
    let mut h = CMatrix::zeros(da, da);
    for uf in u {
        let z: Complex64 = crate::linalg::random_complex_matrix(1, 1, &mut rng)[(0, 0)];
        h += uf * z + uf.adjoint() * z.conj();
    }
    let (values, q) = hermitian_eigen(&h);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &val) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (val - values[*c.last().unwrap()]).abs() <= 1e-6 * (1.0 + val.abs()) => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut projectors: Vec<CMatrix> = clusters
        .iter()
        .map(|c| {
            c.iter().fold(CMatrix::zeros(da, da), |acc, &i| {
                let v = q.column(i);
                acc + &v * v.adjoint()
            })
        })
        .collect();
    let first_index = |p: &CMatrix| (0..da).find(|&i| p[(i, i)].norm() > 1e-8).unwrap_or(da);
    projectors.sort_by_key(first_index);

    let db = exp.w_ops[0].nrows();
    let targets: Vec<CMatrix> = projectors
        .iter()
        .map(|p| {
            let rank = p.trace().re;
            u.iter().zip(&exp.w_ops).fold(CMatrix::zeros(db, db), |acc, (uf, wf)| {
                acc + wf * ((p * uf).trace() / rank)
            })
        })
        .collect();
    let oriented = exp.oriented_gate();
    let sum = projectors
        .iter()
        .zip(&targets)
        .fold(CMatrix::zeros(da * db, da * db), |acc, (p, t)| acc + kron(p, t));
    let recon = kron(&exp.v, &identity(db)) * sum;
    ((oriented.matrix() - recon).norm() <= RESIDUAL_TOL).then_some(ControlledForm { projectors, targets })
}

fn is_double_unitary(group: &FiniteGroup, w: &[CMatrix]) -> bool {
    let db = w[0].nrows();
    let mut normalized = Vec::with_capacity(w.len());
    for wf in w {
        let gram = wf.adjoint() * wf;
        let c = gram.trace().re / db as f64;
        if c <= EPS_NUM {
            return false;
        }
        if (&gram - identity(db) * c64(c, 0.0)).norm() > EPS_NUM * c.max(1.0) * db as f64 {
            return false;
        }
        normalized.push(wf / c64(c.sqrt(), 0.0));
    }
    let e = group.identity();
    let q: Vec<CMatrix> = normalized.iter().map(|m| m * normalized[e].adjoint()).collect();
    let closes = |product: &dyn Fn(usize, usize) -> usize| {
        (0..group.order()).all(|f| {
            (0..group.order()).all(|g| {
                let lhs = &q[f] * &q[g];
                let target = &q[product(f, g)];
                let nu = (target.adjoint() * &lhs).trace() / db as f64;
                (nu.norm() - 1.0).abs() <= 1e-8 && (lhs - target * nu).norm() <= 1e-8
            })
        })
    };
    closes(&|f, g| group.mul(f, g)) || closes(&|f, g| group.mul(g, f))
}

/// Full pipeline; see the crate docs.
pub fn compile(u: &BipartiteUnitary, opts: &CompileOptions, catalog: &Catalog) -> Result<GroupExpansion> {
    let rank = schmidt_decompose(u, opts.rank_tol)?.rank();
    let baseline = baseline_ebits(u.da(), u.db());
    let mut analyses = Vec::new();
    let mut best: Option<GroupExpansion> = None;

    let run_a = matches!(opts.sides, SideSelection::A | SideSelection::Both);
    let run_b = matches!(opts.sides, SideSelection::B | SideSelection::Both);
    if run_a {
        let (analysis, exp) = compile_side(u, Side::A, opts, catalog);
        analyses.push(analysis);
        best = exp;
    }
    // No expansion can use fewer group elements than the Schmidt rank.
    let optimal = best.as_ref().is_some_and(|e| e.group.order() == rank);
    if run_b && !optimal {
        let (analysis, exp) = compile_side(&u.swapped(), Side::B, opts, catalog);
        analyses.push(analysis);
        if let Some(b) = exp {
            if best.as_ref().is_none_or(|a| b.group.order() < a.group.order()) {
                best = Some(b);
            }
        }
    }

    let mut warnings: Vec<String> = Vec::new();
    for a in &analyses {
        for w in &a.warnings {
            warnings.push(format!("side {:?}: {w}", a.side));
        }
        if let Some(e) = &a.error {
            warnings.push(format!("side {:?}: {e}", a.side));
        }
    }
    let mut exp = match best {
        Some(e) if e.cost_ebits <= baseline + 1e-12 => e,
        _ => {
            warnings.push("no group expansion below the teleportation baseline; using the generalized Pauli expansion".into());
            let mut e = generalized_pauli_expansion(u)?;
            e.fallback = true;
            e
        }
    };

    let m = build_m(&exp.group, &exp.factor_system, &exp.w_ops);
    let status = check_m_unitary(&m);
    if let Some(w) = status.warning {
        warnings.push(w);
    }
    warnings.extend(exp.warnings.drain(..));
    exp.analyses = analyses;
    exp.warnings = warnings;
    exp.schmidt_rank = rank;
    Ok(exp)
}

fn failed_analysis(side: Side, error: &Error) -> SideAnalysis {
    SideAnalysis {
        side,
        schmidt_rank: 0,
        block_sizes: Vec::new(),
        classes: Vec::new(),
        n0: 0,
        group: None,
        group_order: None,
        warnings: Vec::new(),
        error: Some(error.to_string()),
    }
}

/// Runs the search on `gate` as oriented (group on the first factor).
fn compile_side(
    gate: &BipartiteUnitary,
    side: Side,
    opts: &CompileOptions,
    catalog: &Catalog,
) -> (SideAnalysis, Option<GroupExpansion>) {
    let dec = match schmidt_decompose(gate, opts.rank_tol) {
        Ok(d) => d,
        Err(e) => return (failed_analysis(side, &e), None),
    };
    let gram = gram_set(&dec);
    let bs = match finest_sbd(&gram, opts.block_tol, opts.seed) {
        Ok(bs) => classify_equivalence(&bs, &gram, opts.block_tol),
        Err(e) => return (failed_analysis(side, &e), None),
    };
    let class_dims = bs.class_dims();
    let mut analysis = SideAnalysis {
        side,
        schmidt_rank: dec.rank(),
        block_sizes: bs.block_sizes.clone(),
        classes: class_dims.clone(),
        n0: class_dims.iter().map(|(d, _)| d * d).sum(),
        group: None,
        group_order: None,
        warnings: Vec::new(),
        error: None,
    };
    let outcome = match search_group(&class_dims, gate.da(), catalog, opts.allow_projective) {
        Ok(o) => o,
        Err(e) => {
            analysis.error = Some(e.to_string());
            return (analysis, None);
        }
    };
    analysis.warnings = outcome.warnings.clone();
    if outcome.is_fallback() {
        analysis
            .warnings
            .push(format!("no catalog group of order up to {} fits", gate.da() * gate.da()));
        return (analysis, None);
    }
    let v = match construct_v(&dec.a_ops, &bs) {
        Ok(v) => v,
        Err(e) => {
            analysis.error = Some(e.to_string());
            return (analysis, None);
        }
    };
    for cand in &outcome.candidates {
        match build_expansion(gate, side, &dec, &bs, &v, cand) {
            Ok(exp) => {
                analysis.group = Some(exp.group.name().to_string());
                analysis.group_order = Some(exp.group.order());
                return (analysis, Some(exp));
            }
            Err(e) => analysis
                .warnings
                .push(format!("candidate {} rejected: {e}", cand.group.name())),
        }
    }
    analysis.error = Some("every candidate group was rejected".into());
    (analysis, None)
}

fn build_expansion(
    gate: &BipartiteUnitary,
    side: Side,
    dec: &SchmidtDecomposition,
    bs: &BlockStructure,
    v: &CMatrix,
    cand: &Candidate,
) -> Result<GroupExpansion> {
    let slots = slot_layout(bs, &cand.coarsening)?;
    let layout = IrrepLayout {
        basis_change: bs.basis_change.clone(),
        irreps: cand.irreps.clone(),
        slots,
    };
    let u_ops = assemble_u(&cand.group, &cand.factor_system, &layout)?;
    let (w_coeffs, w_ops) = compute_w(v, &dec.a_ops, &layout, &dec.b_ops)?;
    let original = match side {
        Side::A => gate.clone(),
        Side::B => gate.swapped(),
    };
    let mut exp = GroupExpansion::from_parts(original, side, v.clone(), u_ops, w_ops, w_coeffs)?;
    if exp.residual > RESIDUAL_TOL {
        return Err(Error::Inconsistent {
            residual: exp.residual,
            tol: RESIDUAL_TOL,
        });
    }
    exp.extension = cand.extension.clone();
    exp.layout = Some(layout);
    exp.coarsening = Some(cand.coarsening.clone());
    Ok(exp)
}

/// Expansion in the generalized Pauli operators `X^a Z^b` of the smaller
/// tensor factor; always exists and costs exactly the baseline.
pub fn generalized_pauli_expansion(u: &BipartiteUnitary) -> Result<GroupExpansion> {
    let side = if u.db() < u.da() { Side::B } else { Side::A };
    let oriented = orient(u, side);
    let d = oriented.da();
    let group = Arc::new(if d == 1 { cyclic(1) } else { abelian(&[d, d]) });
    let mats: Vec<CMatrix> = (0..d * d).map(|f| weyl(d, f / d, f % d)).collect();
    let raw = FactorSystem::from_matrices(&group, &mats, d as u32)?;
    let (mu, c) = raw.normalized(&group)?;
    let mats: Vec<CMatrix> = mats.iter().zip(&c).map(|(m, &z)| m * z).collect();
    let u_ops = Representation::new(group.clone(), mu, mats)?;

    let dec = schmidt_decompose(&oriented, RANK_TOL)?;
    let db = oriented.db();
    let n = group.order();
    let mut w_coeffs = CMatrix::zeros(dec.rank(), n);
    for (k, a) in dec.a_ops.iter().enumerate() {
        for f in 0..n {
            w_coeffs[(k, f)] = (u_ops.matrices[f].adjoint() * a).trace() / c64(d as f64, 0.0);
        }
    }
    let w_ops = (0..n)
        .map(|f| {
            dec.b_ops
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(db, db), |acc, (k, b)| acc + b * w_coeffs[(k, f)])
        })
        .collect();
    let mut exp = GroupExpansion::from_parts(u.clone(), side, identity(d), u_ops.clone(), w_ops, w_coeffs)?;
    exp.layout = Some(IrrepLayout {
        basis_change: identity(d),
        irreps: vec![u_ops],
        slots: vec![Slot {
            indices: (0..d).collect(),
            irrep: 0,
            intertwiner: identity(d),
        }],
    });
    Ok(exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;

    #[test]
    fn cnot_is_controlled_with_control_projectors() {
        let catalog = Catalog::builtin(16);
        let exp = compile(&gates::cnot(), &CompileOptions::default(), &catalog).unwrap();
        assert_eq!(exp.group.order(), 2);
        assert_eq!(exp.classification, Classification::ControlledUnitary);
        let form = exp.controlled_form.as_ref().unwrap();
        assert_eq!(form.projectors.len(), 2);
        assert!((form.projectors[0][(0, 0)] - c64(1.0, 0.0)).norm() < 1e-9);
        assert!((&form.targets[1] - gates::pauli_x()).norm() < 1e-9);
    }

    #[test]
    fn fallback_reproduces_the_gate() {
        let mut rng = rng_from_seed(4);
        let m = crate::linalg::random_unitary(6, &mut rng);
        let u = BipartiteUnitary::new(m, 3, 2).unwrap();
        let exp = generalized_pauli_expansion(&u).unwrap();
        assert_eq!(exp.side, Side::B);
        assert_eq!(exp.group.order(), 4);
        assert!(exp.residual < 1e-10);
        assert!((exp.reconstruct() - u.matrix()).norm() < 1e-10);
    }
}
