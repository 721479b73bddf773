//! JSON file formats: gate matrices, input states and compilation reports.
//!
//! Matrices are row-major arrays of `[re, im]` pairs. Reports embed the full
//! expansion so they can be re-ingested and re-certified; every float is
//! rounded to 12 significant digits so identical inputs give byte-identical
//! output.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{Classification, GroupExpansion, SideAnalysis, Side};
use crate::group::io::GroupTable;
use crate::group::search::ExtensionInfo;
use crate::group::{FactorSystem, Representation};
use crate::linalg::{c64, random_state, rng_from_seed, round_sig, unitarity_deviation, CMatrix, CVector};
use crate::protocol::{build_m, check_m_unitary, simulate_protocol};
use crate::schmidt::BipartiteUnitary;

pub const REPORT_FORMAT: &str = "nlgc-report/1";
const DIGITS: usize = 12;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

fn r12(x: f64) -> f64 {
    round_sig(x, DIGITS)
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [r12(m[(i, j)].re), r12(m[(i, j)].im)]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson, what: &str) -> Result<CMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Parse(format!("{what}: row {i} has {} entries, expected {cols}", row.len())));
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{what} line {} column {}: {e}", e.line(), e.column())))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(rename = "dA")]
    pub da: usize,
    #[serde(rename = "dB")]
    pub db: usize,
    pub matrix: MatrixJson,
}

impl MatrixFile {
    pub fn from_gate(u: &BipartiteUnitary) -> Self {
        Self {
            da: u.da(),
            db: u.db(),
            matrix: matrix_to_json(u.matrix()),
        }
    }

    pub fn into_gate(self) -> Result<BipartiteUnitary> {
        let m = matrix_from_json(&self.matrix, "matrix")?;
        BipartiteUnitary::new(m, self.da, self.db)
    }
}

pub fn parse_matrix_file(text: &str) -> Result<BipartiteUnitary> {
    parse_json::<MatrixFile>(text, "matrix file")?.into_gate()
}

pub fn matrix_file_json(u: &BipartiteUnitary) -> String {
    to_json(&MatrixFile::from_gate(u))
}

/// `{"state": [[re, im], ...]}`; normalized on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub state: Vec<[f64; 2]>,
}

pub fn parse_state_file(text: &str, dim: usize) -> Result<CVector> {
    let file: StateFile = parse_json(text, "state file")?;
    if file.state.len() != dim {
        return Err(Error::Dimension(format!("state has {} amplitudes, expected {dim}", file.state.len())));
    }
    let v = CVector::from_iterator(dim, file.state.iter().map(|z| c64(z[0], z[1])));
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Validation("state has zero norm".into()));
    }
    Ok(v / c64(norm, 0.0))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputDigest {
    #[serde(rename = "dA")]
    pub da: usize,
    #[serde(rename = "dB")]
    pub db: usize,
    pub frobenius_norm: f64,
    pub unitarity_deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub order: usize,
    pub factor_system_root: u32,
    pub projective: bool,
    pub extension: Option<ExtensionInfo>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MStatus {
    pub unitary: bool,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub states: usize,
    pub seed: u64,
    pub branches_per_state: usize,
    pub min_fidelity: f64,
    pub max_probability_deviation: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorSystemData {
    pub root_order: u32,
    /// Exponents of `ω_r`, row-major over `(f, g)`, when exact.
    pub exponents: Option<Vec<u32>>,
    pub phases: Option<MatrixJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpansionData {
    pub group: GroupTable,
    pub factor_system: FactorSystemData,
    pub v: MatrixJson,
    pub u: Vec<MatrixJson>,
    pub w: Vec<MatrixJson>,
    pub w_coeffs: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompilationReport {
    pub format: String,
    pub input: InputDigest,
    pub seed: u64,
    pub schmidt_rank: usize,
    pub sides: Vec<SideAnalysis>,
    pub side: Side,
    pub group: GroupSummary,
    pub cost_ebits: f64,
    pub baseline_ebits: f64,
    pub savings_ebits: f64,
    pub classification: Classification,
    pub residual: f64,
    pub m_unitarity: MStatus,
    pub simulation: Option<SimulationSummary>,
    pub fallback: bool,
    pub warnings: Vec<String>,
    pub gate: MatrixFile,
    pub expansion: ExpansionData,
}

/// Runs the protocol on `states` seeded random inputs.
pub fn simulation_summary(exp: &GroupExpansion, states: usize, seed: u64) -> Result<SimulationSummary> {
    let mut rng = rng_from_seed(seed);
    let dim = exp.gate.da() * exp.gate.db();
    let mut min_fidelity = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    let mut certified = true;
    for _ in 0..states {
        let psi = random_state(dim, &mut rng);
        let trace = simulate_protocol(exp, &psi)?;
        min_fidelity = min_fidelity.min(trace.min_fidelity);
        max_dev = max_dev.max(trace.probability_spread);
        certified &= trace.certified;
    }
    Ok(SimulationSummary {
        states,
        seed,
        branches_per_state: exp.group.order().pow(2),
        min_fidelity: if states == 0 { 1.0 } else { r12(min_fidelity) },
        max_probability_deviation: r12(max_dev),
        certified: certified && states > 0,
    })
}

pub fn build_report(exp: &GroupExpansion, seed: u64, simulation: Option<SimulationSummary>) -> CompilationReport {
    let m = build_m(&exp.group, &exp.factor_system, &exp.w_ops);
    let status = check_m_unitary(&m);
    let fs = &exp.factor_system;
    let n = exp.group.order();
    let factor_system = FactorSystemData {
        root_order: fs.root_order(),
        exponents: fs.exponents().map(|e| e.to_vec()),
        phases: fs
            .exponents()
            .is_none()
            .then(|| matrix_to_json(&CMatrix::from_fn(n, n, |f, g| fs.mu(f, g)))),
    };
    let mut sides = exp.analyses.clone();
    for s in &mut sides {
        s.warnings.sort();
    }
    CompilationReport {
        format: REPORT_FORMAT.into(),
        input: InputDigest {
            da: exp.gate.da(),
            db: exp.gate.db(),
            frobenius_norm: r12(exp.gate.matrix().norm()),
            unitarity_deviation: r12(unitarity_deviation(exp.gate.matrix())),
        },
        seed,
        schmidt_rank: exp.schmidt_rank,
        sides,
        side: exp.side,
        group: GroupSummary {
            name: exp.group.name().to_string(),
            order: n,
            factor_system_root: fs.root_order(),
            projective: !fs.is_trivial(),
            extension: exp.extension.clone(),
        },
        cost_ebits: r12(exp.cost_ebits),
        baseline_ebits: r12(exp.baseline_ebits),
        savings_ebits: r12(exp.savings_ebits()),
        classification: exp.classification,
        residual: r12(exp.residual),
        m_unitarity: MStatus {
            unitary: status.unitary,
            deviation: r12(status.deviation),
        },
        simulation,
        fallback: exp.fallback,
        warnings: exp.warnings.clone(),
        gate: MatrixFile::from_gate(&exp.gate),
        expansion: ExpansionData {
            group: GroupTable::from(exp.group.as_ref()),
            factor_system,
            v: matrix_to_json(&exp.v),
            u: exp.u_ops.matrices.iter().map(matrix_to_json).collect(),
            w: exp.w_ops.iter().map(matrix_to_json).collect(),
            w_coeffs: matrix_to_json(&exp.w_coeffs),
        },
    }
}

pub fn parse_report(text: &str) -> Result<CompilationReport> {
    let report: CompilationReport = parse_json(text, "report")?;
    if report.format != REPORT_FORMAT {
        return Err(Error::Parse(format!("unknown report format {:?}", report.format)));
    }
    Ok(report)
}

/// Rebuilds and re-validates the expansion embedded in a report.
pub fn expansion_from_report(report: &CompilationReport) -> Result<GroupExpansion> {
    let gate = report.gate.clone().into_gate()?;
    let group = Arc::new(report.expansion.group.clone().into_group()?);
    let n = group.order();
    let data = &report.expansion.factor_system;
    let mu = match (&data.exponents, &data.phases) {
        (Some(e), _) => FactorSystem::from_exponents(n, data.root_order, e.clone())?,
        (None, Some(p)) => {
            let m = matrix_from_json(p, "factor system")?;
            FactorSystem::from_phases(n, m.transpose().iter().copied().collect())?
        }
        (None, None) => return Err(Error::Parse("factor system has neither exponents nor phases".into())),
    };
    let mats = report
        .expansion
        .u
        .iter()
        .map(|m| matrix_from_json(m, "U(f)"))
        .collect::<Result<Vec<_>>>()?;
    let u_ops = Representation::new(group, mu, mats)?;
    let w_ops = report
        .expansion
        .w
        .iter()
        .map(|m| matrix_from_json(m, "W(f)"))
        .collect::<Result<Vec<_>>>()?;
    let v = matrix_from_json(&report.expansion.v, "V")?;
    let w_coeffs = matrix_from_json(&report.expansion.w_coeffs, "W coefficients")?;
    let mut exp = GroupExpansion::from_parts(gate, report.side, v, u_ops, w_ops, w_coeffs)?;
    exp.fallback = report.fallback;
    exp.extension = report.group.extension.clone();
    exp.analyses = report.sides.clone();
    exp.warnings = report.warnings.clone();
    Ok(exp)
}
