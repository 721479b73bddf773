use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nlgc::expansion::{compile, CompileOptions, SideSelection};
use nlgc::group::catalog::Catalog;
use nlgc::group::io::{load_group, GroupTable};
use nlgc::group::irreps_of;
use nlgc::linalg::{random_state, rng_from_seed, round_sig, CVector};
use nlgc::protocol::{simulate_protocol, LINEAR_DEPENDENCE_WARNING};
use nlgc::report::{
    build_report, expansion_from_report, matrix_to_json, parse_matrix_file, parse_report, parse_state_file,
    simulation_summary, to_json,
};
use nlgc::schmidt::schmidt_decompose;
use nlgc::tolerance::{EPS_BLOCK, RANK_TOL};
use nlgc::{Error, GroupExpansion};

const FIDELITY_FLOOR: f64 = 1.0 - 1e-9;
const VERIFY_TOL: f64 = 1e-9;

mod exit {
    pub const IO: u8 = 1;
    pub const INVALID: u8 = 2;
    pub const FALLBACK: u8 = 3;
    pub const NON_UNITARY_M: u8 = 4;
    pub const UNCERTIFIED: u8 = 5;
}

/// Compile bipartite unitaries into group expansions and certify the
/// resulting entanglement-assisted local protocol.
#[derive(Parser)]
#[command(name = "nlgc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the smallest group expansion of a gate and write a report.
    Compile {
        /// Matrix file: {"dA", "dB", "matrix": [[[re, im], ...], ...]}.
        matrix: PathBuf,
        #[command(flatten)]
        compile: CompileArgs,
        /// Random states used to certify the protocol (0 skips simulation).
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run every measurement branch of the protocol.
    Simulate {
        /// A report from `compile` or a matrix file (compiled on the fly).
        input: PathBuf,
        /// State file: {"state": [[re, im], ...]}.
        #[arg(long, conflicts_with = "random")]
        state: Option<PathBuf>,
        /// Number of seeded random input states.
        #[arg(long)]
        random: Option<usize>,
        #[command(flatten)]
        compile: CompileArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Inspect or extend the group catalog.
    Groups {
        #[command(subcommand)]
        action: GroupsAction,
        #[arg(long, default_value_t = 64, global = true)]
        max_order: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Operator-Schmidt decomposition of a gate.
    Schmidt {
        matrix: PathBuf,
        #[arg(long, default_value_t = RANK_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-check a report: rebuild its expansion, residual, cost and protocol.
    Verify {
        report: PathBuf,
        /// Random states used for re-certification.
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum GroupsAction {
    /// Every catalog group with its irrep dimensions.
    List,
    /// Table, inverses and irreps of one group.
    Show { name: String },
    /// Validate a group table file and show it as registered.
    Load { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    Both,
}

#[derive(Args)]
struct CompileArgs {
    /// Block-structure tolerance.
    #[arg(long, default_value_t = EPS_BLOCK)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest catalog group order considered.
    #[arg(long, default_value_t = 64)]
    max_order: usize,
    /// Allow projective representations (the default).
    #[arg(long, overrides_with = "no_projective")]
    projective: bool,
    /// Restrict the search to ordinary representations.
    #[arg(long)]
    no_projective: bool,
    /// Which party's operators carry the group representation.
    #[arg(long, value_enum, default_value = "both")]
    side: SideArg,
}

#[derive(Args)]
struct OutputArgs {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CompileArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            block_tol: self.tol,
            seed: self.seed,
            allow_projective: !self.no_projective,
            sides: match self.side {
                SideArg::A => SideSelection::A,
                SideArg::B => SideSelection::B,
                SideArg::Both => SideSelection::Both,
            },
            ..CompileOptions::default()
        }
    }
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => exit::IO,
            Error::Parse(_) | Error::Json(_) | Error::Validation(_) | Error::Dimension(_) => exit::INVALID,
            _ => exit::IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: exit::IO,
        message: format!("{}: {e}", path.display()),
    })
}

fn emit(text: &str, output: &OutputArgs) -> Result<(), Failure> {
    match &output.out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| Failure {
            code: exit::IO,
            message: format!("{}: {e}", path.display()),
        }),
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        None => match writeln!(std::io::stdout(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure {
                code: exit::IO,
                message: format!("stdout: {e}"),
            }),
            _ => Ok(()),
        },
    }
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON values serialize")
}

fn r12(x: f64) -> f64 {
    round_sig(x, 12)
}

fn catalog(max_order: usize) -> Result<Catalog, Failure> {
    Ok(Catalog::builtin(max_order).with_env()?)
}

fn compile_gate(path: &Path, args: &CompileArgs) -> Result<GroupExpansion, Failure> {
    let gate = parse_matrix_file(&read(path)?)?;
    Ok(compile(&gate, &args.options(), &catalog(args.max_order)?)?)
}

fn cmd_compile(matrix: &Path, args: &CompileArgs, states: usize, output: &OutputArgs) -> Outcome {
    let exp = compile_gate(matrix, args)?;
    let sim = (states > 0).then(|| simulation_summary(&exp, states, args.seed)).transpose()?;
    emit(&to_json(&build_report(&exp, args.seed, sim)), output)?;
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if exp.fallback { exit::FALLBACK } else { 0 })
}

fn load_expansion(input: &Path, args: &CompileArgs) -> Result<GroupExpansion, Failure> {
    let text = read(input)?;
    let is_report = serde_json::from_str::<Value>(&text)
        .ok()
        .is_some_and(|v| v.get("format").is_some());
    if is_report {
        Ok(expansion_from_report(&parse_report(&text)?)?)
    } else {
        compile_gate(input, args)
    }
}

fn cmd_simulate(
    input: &Path,
    state: Option<&Path>,
    random: Option<usize>,
    args: &CompileArgs,
    output: &OutputArgs,
) -> Outcome {
    let exp = load_expansion(input, args)?;
    let dim = exp.gate.da() * exp.gate.db();
    let states: Vec<CVector> = match state {
        Some(path) => vec![parse_state_file(&read(path)?, dim)?],
        None => {
            let mut rng = rng_from_seed(args.seed);
            (0..random.unwrap_or(1)).map(|_| random_state(dim, &mut rng)).collect()
        }
    };
    let mut rows = Vec::new();
    let mut min_fidelity = f64::INFINITY;
    let mut max_spread: f64 = 0.0;
    let mut m_status = None;
    for (s, psi) in states.iter().enumerate() {
        let trace = simulate_protocol(&exp, psi)?;
        for b in &trace.branches {
            rows.push(json!({
                "state": s,
                "h": b.h,
                "g": b.g,
                "probability": r12(b.probability),
                "fidelity": r12(b.fidelity),
            }));
        }
        min_fidelity = min_fidelity.min(trace.min_fidelity);
        max_spread = max_spread.max(trace.probability_spread);
        m_status.get_or_insert(trace.m_unitarity);
    }
    let m_status = m_status.expect("at least one state");
    let certified = m_status.unitary && min_fidelity >= FIDELITY_FLOOR;
    let summary = json!({
        "group": exp.group.name(),
        "order": exp.group.order(),
        "states": states.len(),
        "branches": rows,
        "min_fidelity": r12(min_fidelity),
        "max_probability_deviation": r12(max_spread),
        "m_unitary": m_status.unitary,
        "m_deviation": r12(m_status.deviation),
        "certified": certified,
    });
    emit(&pretty(&summary), output)?;
    if !m_status.unitary {
        let why = m_status.warning.unwrap_or_else(|| LINEAR_DEPENDENCE_WARNING.to_string());
        eprintln!("error: M is not unitary (deviation {:.3e}): {why}", m_status.deviation);
        return Ok(exit::NON_UNITARY_M);
    }
    if !certified {
        eprintln!("error: minimum fidelity {min_fidelity:.12} below {FIDELITY_FLOOR}");
        return Ok(exit::UNCERTIFIED);
    }
    Ok(0)
}

fn group_json(catalog: &Catalog, index: usize, detailed: bool) -> Result<Value, Failure> {
    let entry = catalog.get(index);
    let g = entry.group();
    let mut dims = entry.irrep_dims()?;
    dims.sort_unstable();
    let mut value = json!({
        "name": g.name(),
        "aliases": entry.aliases(),
        "order": g.order(),
        "abelian": g.is_abelian(),
        "irrep_dims": dims,
    });
    if detailed {
        let irreps = entry.irreps()?;
        let identity_characters: Vec<f64> =
            irreps.iter().map(|r| r12(r.character(g.identity()).re)).collect();
        let characters: Vec<Value> = irreps
            .iter()
            .map(|r| json!(r.characters().iter().map(|c| [r12(c.re), r12(c.im)]).collect::<Vec<_>>()))
            .collect();
        value["table"] = serde_json::to_value(GroupTable::from(g.as_ref())).expect("table serializes")["table"].take();
        value["identity"] = json!(g.identity());
        value["inverses"] = json!(g.inverses());
        value["identity_characters"] = json!(identity_characters);
        value["characters"] = json!(characters);
    }
    Ok(value)
}

fn cmd_groups(action: &GroupsAction, max_order: usize, output: &OutputArgs) -> Outcome {
    let catalog = catalog(max_order)?;
    let value = match action {
        GroupsAction::List => {
            let groups = (0..catalog.len())
                .map(|i| group_json(&catalog, i, false))
                .collect::<Result<Vec<_>, _>>()?;
            json!({ "complete_up_to": catalog.complete_up_to(), "groups": groups })
        }
        GroupsAction::Show { name } => {
            let (index, _) = catalog.find(name).ok_or_else(|| Failure {
                code: exit::INVALID,
                message: format!("no catalog group named {name:?}"),
            })?;
            group_json(&catalog, index, true)?
        }
        GroupsAction::Load { file } => {
            let g = load_group(file).map_err(|e| Failure {
                code: exit::INVALID,
                message: format!("{}: {e}", file.display()),
            })?;
            // Irreps are checked eagerly so a loaded table is usable as-is.
            irreps_of(&g, &nlgc::FactorSystem::trivial(g.order()), 0)?;
            let catalog = catalog.with_groups(vec![g.clone()]);
            let (index, entry) = catalog.identify(&g).ok_or_else(|| Failure {
                code: exit::INVALID,
                message: format!("{} exceeds --max-order {max_order}", g.name()),
            })?;
            let mut value = group_json(&catalog, index, true)?;
            value["registered_as"] = json!(entry.name());
            value
        }
    };
    emit(&pretty(&value), output)?;
    Ok(0)
}

fn cmd_schmidt(matrix: &Path, tol: f64, output: &OutputArgs) -> Outcome {
    let gate = parse_matrix_file(&read(matrix)?)?;
    let dec = schmidt_decompose(&gate, tol)?;
    let value = json!({
        "dA": dec.da,
        "dB": dec.db,
        "rank": dec.rank(),
        "coefficients": dec.coefficients.iter().map(|&c| r12(c)).collect::<Vec<_>>(),
        "a_ops": dec.a_ops.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "b_ops": dec.b_ops.iter().map(matrix_to_json).collect::<Vec<_>>(),
    });
    emit(&pretty(&value), output)?;
    Ok(0)
}

fn cmd_verify(path: &Path, states: usize, output: &OutputArgs) -> Outcome {
    let report = parse_report(&read(path)?)?;
    let exp = expansion_from_report(&report)?;
    let sim = simulation_summary(&exp, states, report.seed)?;
    let residual_ok = (exp.residual - report.residual).abs() <= VERIFY_TOL && exp.residual <= 1e-8;
    let cost_ok = (exp.cost_ebits - report.cost_ebits).abs() <= VERIFY_TOL;
    let value = json!({
        "group": exp.group.name(),
        "residual": r12(exp.residual),
        "reported_residual": report.residual,
        "residual_ok": residual_ok,
        "cost_ebits": r12(exp.cost_ebits),
        "cost_ok": cost_ok,
        "simulation": sim,
    });
    emit(&pretty(&value), output)?;
    Ok(if residual_ok && cost_ok && sim.certified { 0 } else { exit::UNCERTIFIED })
}

fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::Compile {
            matrix,
            compile,
            states,
            output,
        } => cmd_compile(matrix, compile, *states, output),
        Command::Simulate {
            input,
            state,
            random,
            compile,
            output,
        } => cmd_simulate(input, state.as_deref(), *random, compile, output),
        Command::Groups {
            action,
            max_order,
            output,
        } => cmd_groups(action, *max_order, output),
        Command::Schmidt { matrix, tol, output } => cmd_schmidt(matrix, *tol, output),
        Command::Verify { report, states, output } => cmd_verify(report, *states, output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
