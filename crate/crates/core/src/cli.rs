//! Command-line front end. Every command is deterministic: exact values are
//! printed as `p/q` strings and JSON objects have sorted keys.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::catalog::{self, Expected, NAMES};
use crate::classify::{
    clarke_matrix, clarke_transition, classify_ports, decoupled_ports, reduced_star_inverse, transition_residual,
    ClarkeVariant,
};
use crate::error::{Error, Result};
use crate::io::{load_input, load_ports, load_schedule, matrix_json, rational_json, rationals_json, topology_json, Input};
use crate::loops::{cyclomatic_number, topology_loops};
use crate::power::{balance_mismatches, decompose, PowerMatrix};
use crate::ratmat::Matrix;
use crate::scalar::{format_float, format_rational, Rational};
use crate::simulate::{reconstruction_residuals, simulate, verify_decoupling, Domain, Integrator, SimConfig, SimTrace};
use crate::spectral::{edge_current_map, edge_voltage_map, modal_ohm, spectrum, ArmModel, SpectrumMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 1;
pub const EXIT_FIXTURE_MISMATCH: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cellgraph", version, about = "Normal-mode analysis of converter arm graphs")]
pub struct Cli {
    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress warnings and appended reports.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Resistive,
    Inductive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rk4,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Modal,
    Nodal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Amplitude,
    Power,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Laplacian, spectrum, eigenbasis and modal matrix.
    Analyze {
        /// Topology file or `catalog:<name>`.
        input: String,
    },
    /// Fundamental cycles and the orthogonal loop basis.
    Loops { input: String },
    /// Nodal and arm power coefficient matrices.
    Power {
        input: String,
        /// Add loop-current terms to the arm matrix.
        #[arg(long)]
        with_loops: bool,
        /// Also add loop-voltage terms (implies --with-loops).
        #[arg(long)]
        loop_voltage: bool,
    },
    /// Time-domain simulation of modal sources.
    Simulate {
        input: String,
        /// Schedule file or `builtin:fig7`.
        #[arg(long)]
        schedule: String,
        #[arg(long)]
        dt: Option<f64>,
        /// Simulated duration in seconds.
        #[arg(long = "T")]
        duration: Option<f64>,
        #[arg(long, value_enum, default_value = "rk4")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "inductive")]
        mode: ModelArg,
        #[arg(long, value_enum, default_value = "modal")]
        domain: DomainArg,
        /// Arm conductance in siemens (resistive mode).
        #[arg(long)]
        ga: Option<f64>,
        /// Arm inductance in henry (inductive mode).
        #[arg(long)]
        la: Option<f64>,
    },
    /// Galvanic isolation and current decoupling of named ports.
    Classify {
        input: String,
        #[arg(long)]
        ports: String,
    },
    /// Transition from the grounded star eigenbasis to the Clarke transform.
    Clarke {
        #[arg(default_value = "catalog:Y")]
        input: String,
        #[arg(long, value_enum, default_value = "amplitude")]
        variant: VariantArg,
    },
    /// Reference topologies.
    Catalog {
        #[arg(long)]
        list: bool,
        name: Option<String>,
    },
    /// Reference fixtures; `--verify` recomputes and diffs them.
    Fixtures {
        #[arg(long)]
        verify: bool,
        /// Restrict to one catalog entry.
        #[arg(long)]
        entry: Option<String>,
    },
}

/// A command's result before it is written out.
struct Output {
    body: String,
    code: i32,
    warnings: Vec<String>,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, code: EXIT_OK, warnings: Vec::new() }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::SingularMatrix { .. } => EXIT_NUMERICAL,
        _ => EXIT_BAD_INPUT,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_BAD_INPUT
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if !cli.quiet {
                for w in &out.warnings {
                    let _ = writeln!(stderr, "warning: {w}");
                }
            }
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.body),
                None => stdout.write_all(out.body.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_BAD_INPUT;
            }
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Analyze { input } => analyze(&load_input(input)?, fmt(Format::Json)),
        Command::Loops { input } => loops(&load_input(input)?, fmt(Format::Json)),
        Command::Power { input, with_loops, loop_voltage } => {
            power(&load_input(input)?, *with_loops || *loop_voltage, *loop_voltage, fmt(Format::Json))
        }
        Command::Simulate { input, schedule, dt, duration, method, mode, domain, ga, la } => {
            let mut config = SimConfig {
                model: match mode {
                    ModelArg::Resistive => ArmModel::Resistive,
                    ModelArg::Inductive => ArmModel::Inductive,
                },
                integrator: match method {
                    MethodArg::Rk4 => Integrator::Rk4,
                    MethodArg::Exact => Integrator::Exact,
                },
                domain: match domain {
                    DomainArg::Modal => Domain::Modal,
                    DomainArg::Nodal => Domain::Nodal,
                },
                ..SimConfig::default()
            };
            if let Some(x) = dt {
                config.dt = *x;
            }
            if let Some(x) = duration {
                config.duration = *x;
            }
            if let Some(x) = ga {
                config.g_a = *x;
            }
            if let Some(x) = la {
                config.l_a = *x;
            }
            run_simulation(&load_input(input)?, schedule, &config, fmt(Format::Csv), cli.quiet)
        }
        Command::Classify { input, ports } => classify(&load_input(input)?, ports, fmt(Format::Json)),
        Command::Clarke { input, variant } => {
            let v = match variant {
                VariantArg::Amplitude => ClarkeVariant::Amplitude,
                VariantArg::Power => ClarkeVariant::Power,
            };
            clarke(&load_input(input)?, v, fmt(Format::Json))
        }
        Command::Catalog { list, name } => catalog_cmd(*list, name.as_deref(), fmt(Format::Json)),
        Command::Fixtures { verify, entry } => fixtures(*verify, entry.as_deref(), fmt(Format::Text)),
    }
}

fn unsupported(fmt: Format, what: &str) -> Result<Output> {
    Err(Error::InvalidArgument(format!("{} output is not available for {what}", format_name(fmt))))
}

fn format_name(fmt: Format) -> &'static str {
    match fmt {
        Format::Json => "json",
        Format::Csv => "csv",
        Format::Text => "text",
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialise");
    s.push('\n');
    s
}

fn text_matrix(out: &mut String, title: &str, m: &Matrix<Rational>) {
    let cells: Vec<Vec<String>> = m.row_vecs().iter().map(|r| r.iter().map(format_rational).collect()).collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    let _ = writeln!(out, "{title} ({}x{})", m.rows(), m.cols());
    for row in cells {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        let _ = writeln!(out, "  {}", line.join("  "));
    }
}

fn csv_matrix(m: &Matrix<Rational>, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        let _ = writeln!(out, "{}", h.join(","));
    }
    for r in m.row_vecs() {
        let _ = writeln!(out, "{}", r.iter().map(format_rational).collect::<Vec<_>>().join(","));
    }
    out
}

fn deviations_json(input: &Input) -> Value {
    let devs = input.entry.as_ref().map(|e| e.deviations.as_slice()).unwrap_or_default();
    Value::Array(
        devs.iter()
            .map(|d| json!({"fixture": d.fixture, "printed": d.printed, "derived": d.derived, "justification": d.justification}))
            .collect(),
    )
}

fn method_name(m: SpectrumMethod) -> &'static str {
    match m {
        SpectrumMethod::ClosedForm => "closed_form",
        SpectrumMethod::JacobiSnapped => "jacobi_snapped",
        SpectrumMethod::JacobiApproximate => "jacobi_approximate",
    }
}

fn analyze(input: &Input, fmt: Format) -> Result<Output> {
    let t = &input.topology;
    let basis = input.basis()?;
    let uniform = input.arm_conductance().ok();
    let g = uniform.clone().unwrap_or_else(|| crate::scalar::int(1));
    let m = modal_ohm(&basis, &g)?;
    let spec = spectrum(t);
    match fmt {
        Format::Json => {
            let ports = t.partitions().map(|p| serde_json::to_value(decoupled_ports(&basis, p)).expect("serialise"));
            let current_map = match uniform {
                Some(_) => matrix_json(&edge_current_map(t, &basis, &m)?),
                None => Value::Null,
            };
            let v = json!({
                "name": input.name,
                "topology": topology_json(t),
                "n_vertices": t.n_vertices(),
                "n_edges": t.n_edges(),
                "n_components": t.n_components(),
                "incidence": matrix_json(&t.incidence()),
                "laplacian": matrix_json(&t.laplacian()),
                "spectrum": {
                    "method": method_name(spec.method),
                    "exact": spec.exact.as_deref().map(rationals_json),
                    "approximate": spec.approximate.iter().map(|x| format_float(*x)).collect::<Vec<_>>(),
                },
                "labels": basis.labels(),
                "eigenvalues": rationals_json(basis.eigenvalues()),
                "p": matrix_json(basis.p()),
                "p_inv": matrix_json(basis.p_inv()),
                "modal": {"model": "resistive", "scale": rational_json(&m.scale), "diagonal": rationals_json(&m.diagonal)},
                "edge_voltage_map": matrix_json(&edge_voltage_map(t, &basis)?),
                "edge_current_map": current_map,
                "cyclomatic_number": cyclomatic_number(t),
                "decoupled_ports": ports,
                "deviations": deviations_json(input),
            });
            Ok(Output::ok(pretty(&v)))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "topology {}: {} vertices, {} arms, {} component(s), {} loop(s)",
                input.name,
                t.n_vertices(),
                t.n_edges(),
                t.n_components(),
                cyclomatic_number(t)
            );
            let _ = writeln!(s, "modes (M = {} · diag(λ))", format_rational(&m.scale));
            for (k, l) in basis.labels().iter().enumerate() {
                let _ = writeln!(s, "  {l:<8} λ = {:<6} M = {}", format_rational(&basis.eigenvalues()[k]), format_rational(&m.diagonal[k]));
            }
            text_matrix(&mut s, "L", &t.laplacian());
            text_matrix(&mut s, "P", basis.p());
            text_matrix(&mut s, "P_inv", basis.p_inv());
            if let Some(e) = &input.entry {
                for d in &e.deviations {
                    let _ = writeln!(s, "deviation {}: printed {}; derived {}", d.fixture, d.printed, d.derived);
                }
            }
            Ok(Output::ok(s))
        }
        Format::Csv => {
            let mut s = String::from("label,eigenvalue,modal\n");
            for (k, l) in basis.labels().iter().enumerate() {
                let _ = writeln!(s, "{l},{},{}", format_rational(&basis.eigenvalues()[k]), format_rational(&m.diagonal[k]));
            }
            Ok(Output::ok(s))
        }
    }
}

fn loops(input: &Input, fmt: Format) -> Result<Output> {
    let t = &input.topology;
    let lb = topology_loops(t);
    match fmt {
        Format::Json => {
            let members: Vec<Value> =
                (0..lb.rank()).map(|k| json!({"label": lb.labels()[k], "edges": lb.members(k)})).collect();
            let b_loop = if lb.rank() == 0 { Value::Array(vec![]) } else { matrix_json(&lb.matrix()) };
            Ok(Output::ok(pretty(&json!({
                "name": input.name,
                "cyclomatic_number": cyclomatic_number(t),
                "n": matrix_json(lb.n()),
                "rank": lb.rank(),
                "labels": lb.labels(),
                "b_loop": b_loop,
                "squared_norms": rationals_json(lb.squared_norms()),
                "members": members,
            }))))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{}: {} independent loop(s)", input.name, lb.rank());
            text_matrix(&mut s, "N", lb.n());
            for k in 0..lb.rank() {
                let col: Vec<String> = lb.columns()[k].iter().map(format_rational).collect();
                let _ = writeln!(
                    s,
                    "  {} = ({})  |·|² = {}  edges {:?}",
                    lb.labels()[k],
                    col.join(", "),
                    format_rational(&lb.squared_norms()[k]),
                    lb.members(k)
                );
            }
            Ok(Output::ok(s))
        }
        Format::Csv => {
            if lb.rank() == 0 {
                return Ok(Output::ok(String::new()));
            }
            let header: Vec<String> = lb.labels().to_vec();
            Ok(Output::ok(csv_matrix(&lb.matrix(), Some(&header))))
        }
    }
}

fn power_json(p: &PowerMatrix) -> Value {
    json!({
        "labels": p.labels.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "gamma": matrix_json(&p.gamma),
    })
}

fn power(input: &Input, with_loops: bool, loop_voltage: bool, fmt: Format) -> Result<Output> {
    let t = &input.topology;
    let basis = input.basis()?;
    let m = input.modal(&basis)?;
    let lb = topology_loops(t);
    let d = decompose(t, &basis, &m, with_loops.then_some(&lb), loop_voltage)?;
    let balance = d.edges.balance();
    let mismatches = balance_mismatches(&d.nodes, &d.edges, lb.labels());
    match fmt {
        Format::Json => Ok(Output::ok(pretty(&json!({
            "name": input.name,
            "with_loops": with_loops,
            "loop_voltage": loop_voltage,
            "gamma_nodes": power_json(&d.nodes),
            "gamma_edges": power_json(&d.edges),
            "ranks": {"nodes": d.nodes_basis.rank, "edges": d.edges_basis.rank},
            "bases": {
                "nodes": {"basis": matrix_json(&d.nodes_basis.basis), "squared_norms": rationals_json(&d.nodes_basis.squared_norms)},
                "edges": {"basis": matrix_json(&d.edges_basis.basis), "squared_norms": rationals_json(&d.edges_basis.squared_norms)},
            },
            "balance": balance
                .iter()
                .filter(|(_, c)| !num_traits::Zero::is_zero(c))
                .map(|(l, c)| json!({"term": l.to_string(), "coefficient": rational_json(c)}))
                .collect::<Vec<_>>(),
            "balance_mismatches": mismatches.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })))),
        Format::Text => {
            let mut s = String::new();
            for (title, pm) in [("Γ′ (nodes)", &d.nodes), ("Γ″ (arms)", &d.edges)] {
                let labels: Vec<String> = pm.labels.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "{title}: {}", labels.join(" "));
                text_matrix(&mut s, "  coefficients", &pm.gamma);
            }
            let _ = writeln!(s, "ranks: nodes {}, arms {}", d.nodes_basis.rank, d.edges_basis.rank);
            let terms: Vec<String> = balance
                .iter()
                .filter(|(_, c)| !num_traits::Zero::is_zero(c))
                .map(|(l, c)| format!("{}·{l}", format_rational(c)))
                .collect();
            let _ = writeln!(s, "balance: {}", terms.join(" + "));
            if !mismatches.is_empty() {
                let list: Vec<String> = mismatches.iter().map(ToString::to_string).collect();
                let _ = writeln!(s, "balance mismatches: {}", list.join(" "));
            }
            Ok(Output::ok(s))
        }
        Format::Csv => {
            let header: Vec<String> = d.edges.labels.iter().map(ToString::to_string).collect();
            Ok(Output::ok(csv_matrix(&d.edges.gamma, Some(&header))))
        }
    }
}

fn run_simulation(input: &Input, schedule: &str, config: &SimConfig, fmt: Format, quiet: bool) -> Result<Output> {
    let t = &input.topology;
    let basis = input.basis()?;
    let lb = topology_loops(t);
    let schedule = load_schedule(schedule)?;
    let trace: SimTrace<f64> = simulate(t, &basis, &lb, &schedule, config)?;
    let report = verify_decoupling(&trace, &schedule)?;
    let rec = reconstruction_residuals(t, &basis, &trace)?;
    let summary = json!({
        "name": input.name,
        "config": config,
        "steps": trace.len(),
        "max_leakage": format_float(report.max_leakage),
        "reconstruction": {"modes_to_nodes": format_float(rec.modes_to_nodes), "kirchhoff": format_float(rec.kirchhoff)},
        "windows": report.windows,
        "warnings": trace.warnings,
    });
    let mut out = match fmt {
        Format::Csv => {
            let mut s = trace.to_csv();
            if !quiet {
                let _ = writeln!(s, "# decoupling: max cross-mode leakage {}", format_float(report.max_leakage));
                for w in &report.windows {
                    let worst = w.entries.iter().map(|e| e.leakage).fold(0.0f64, f64::max);
                    let _ = writeln!(
                        s,
                        "# window [{}, {}] driven {} idle {} attributable {} max leakage {}",
                        format_float(w.start),
                        format_float(w.end),
                        w.driven.join("|"),
                        w.idle.join("|"),
                        w.attributable,
                        format_float(worst)
                    );
                }
                let _ = writeln!(
                    s,
                    "# reconstruction: modes->nodes {} kirchhoff {}",
                    format_float(rec.modes_to_nodes),
                    format_float(rec.kirchhoff)
                );
            }
            Output::ok(s)
        }
        Format::Json => Output::ok(pretty(&summary)),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{}: {} steps", input.name, trace.len());
            let _ = writeln!(s, "max cross-mode leakage {}", format_float(report.max_leakage));
            let _ = writeln!(s, "reconstruction modes->nodes {} kirchhoff {}", format_float(rec.modes_to_nodes), format_float(rec.kirchhoff));
            Output::ok(s)
        }
    };
    out.warnings = trace.warnings.clone();
    Ok(out)
}

fn classify(input: &Input, ports: &str, fmt: Format) -> Result<Output> {
    let spec = load_ports(ports)?;
    let basis = input.basis().ok();
    let c = classify_ports(&input.topology, &spec, basis.as_ref())?;
    match fmt {
        Format::Json => {
            let mut v = serde_json::to_value(&c)?;
            v["name"] = json!(input.name);
            v["ports"] = json!(spec.ports);
            if let (Some(b), Some(p)) = (&basis, input.topology.partitions()) {
                v["decoupled_ports"] = serde_json::to_value(decoupled_ports(b, p))?;
            }
            Ok(Output::ok(pretty(&v)))
        }
        Format::Text => {
            let mark = |b: bool| if b { "yes" } else { "no" };
            let mut s = format!("{}: GIP {} DCP {} -> {}\n", input.name, mark(c.gip), mark(c.dcp), c.category);
            if let Some(ms) = c.mode_support_dcp {
                let _ = writeln!(s, "mode-support decoupling: {}", mark(ms));
            }
            for tr in &c.transfers {
                let _ = writeln!(
                    s,
                    "  {} {:?} -> {} {:?}: {}",
                    tr.from_port, tr.injection, tr.to_port, tr.across, tr.voltage
                );
            }
            if c.synthetic {
                s.push_str("  (declared couplings present: verdict is synthetic)\n");
            }
            Ok(Output::ok(s))
        }
        Format::Csv => unsupported(fmt, "classify"),
    }
}

fn clarke(input: &Input, variant: ClarkeVariant, fmt: Format) -> Result<Output> {
    let basis = input.basis()?;
    let r = clarke_transition(&basis, variant)?;
    let printed = input.entry.as_ref().and_then(|e| e.fixture("clarke_transition")).and_then(|f| match &f.expected {
        Expected::ClarkeTransition { transition, .. } => Some(transition.clone()),
        _ => None,
    });
    let printed_residual = match &printed {
        Some(tp) => Some(transition_residual(tp, &reduced_star_inverse(&basis, 0)?, &clarke_matrix(variant))?),
        None => None,
    };
    match fmt {
        Format::Json => Ok(Output::ok(pretty(&json!({
            "name": input.name,
            "variant": variant,
            "clarke": clarke_matrix(variant),
            "reduced_p_inv": r.reduced,
            "transition": r.transition,
            "residual": format_float(r.residual),
            "reference_transition": printed,
            "reference_residual": printed_residual.map(format_float),
        })))),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "variant {:?}", variant);
            text_matrix(&mut s, "P_inv reduced", &r.reduced);
            let _ = writeln!(s, "T");
            for row in r.transition.row_vecs() {
                let cells: Vec<String> = row.iter().map(|x| format!("{:>16}", format_float(*x))).collect();
                let _ = writeln!(s, "  {}", cells.join(" "));
            }
            let _ = writeln!(s, "residual {}", format_float(r.residual));
            if let Some(pr) = printed_residual {
                let _ = writeln!(s, "reference T residual {}", format_float(pr));
            }
            Ok(Output::ok(s))
        }
        Format::Csv => unsupported(fmt, "clarke"),
    }
}

fn entry_json(e: &catalog::CatalogEntry) -> Value {
    json!({
        "name": e.name,
        "topology": topology_json(&e.topology),
        "mode_order": rationals_json(&e.mode_order),
        "fixtures": e.fixtures.iter().map(|f| json!({"id": f.id, "kind": f.expected.kind()})).collect::<Vec<_>>(),
        "deviations": e.deviations.iter().map(|d| json!({
            "fixture": d.fixture, "printed": d.printed, "derived": d.derived, "justification": d.justification,
        })).collect::<Vec<_>>(),
    })
}

fn catalog_cmd(list: bool, name: Option<&str>, fmt: Format) -> Result<Output> {
    let entries = match (list, name) {
        (_, Some(n)) => vec![catalog::catalog(n)?],
        (true, None) => catalog::all(),
        (false, None) => return Err(Error::InvalidArgument("give a catalog name or --list".into())),
    };
    match fmt {
        Format::Json if list && name.is_none() => {
            let rows: Vec<Value> = entries
                .iter()
                .map(|e| json!({"name": e.name, "n_vertices": e.topology.n_vertices(), "n_edges": e.topology.n_edges(), "mode_order": rationals_json(&e.mode_order)}))
                .collect();
            Ok(Output::ok(pretty(&Value::Array(rows))))
        }
        Format::Json => Ok(Output::ok(pretty(&entry_json(&entries[0])))),
        Format::Text => {
            let mut s = String::new();
            for e in &entries {
                let order: Vec<String> = e.mode_order.iter().map(format_rational).collect();
                let _ = writeln!(
                    s,
                    "{:<5} {} vertices, {} arms, modes ({}), {} fixtures, {} deviations",
                    e.name,
                    e.topology.n_vertices(),
                    e.topology.n_edges(),
                    order.join(", "),
                    e.fixtures.len(),
                    e.deviations.len()
                );
            }
            Ok(Output::ok(s))
        }
        Format::Csv => {
            let mut s = String::from("name,n_vertices,n_edges,mode_order\n");
            for e in &entries {
                let order: Vec<String> = e.mode_order.iter().map(format_rational).collect();
                let _ = writeln!(s, "{},{},{},{}", e.name, e.topology.n_vertices(), e.topology.n_edges(), order.join(" "));
            }
            Ok(Output::ok(s))
        }
    }
}

fn fixtures(verify: bool, entry: Option<&str>, fmt: Format) -> Result<Output> {
    let entries = match entry {
        Some(n) => vec![catalog::catalog(n)?],
        None => catalog::all(),
    };
    if !verify {
        let mut s = String::new();
        for e in &entries {
            for f in &e.fixtures {
                let ledgered = if e.deviation(&f.id).is_some() { " (ledgered deviation)" } else { "" };
                let _ = writeln!(s, "{:<5} {:<22} {}{ledgered}", e.name, f.id, f.expected.kind());
            }
        }
        return Ok(Output::ok(s));
    }
    let report = catalog::verify(&entries);
    let body = match fmt {
        Format::Text => report.to_text(),
        Format::Json => pretty(&serde_json::to_value(&report)?),
        Format::Csv => {
            let mut s = String::from("entry,fixture,kind,status\n");
            for r in &report.results {
                let status = serde_json::to_value(r.status)?;
                let _ = writeln!(s, "{},{},{},{}", r.entry, r.fixture, r.kind, status.as_str().unwrap_or_default());
            }
            s
        }
    };
    let code = if report.ok() { EXIT_OK } else { EXIT_FIXTURE_MISMATCH };
    Ok(Output { body, code, warnings: Vec::new() })
}

/// Catalog names, for help text and tests.
pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("cellgraph").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn analyze_catalog_entry() {
        let (code, out, _) = call(&["analyze", "catalog:2Y"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["eigenvalues"], json!(["0", "3", "5", "2", "2"]));
        assert_eq!(v["labels"][1], "alpha");
    }

    #[test]
    fn bad_input_exits_one() {
        assert_eq!(call(&["analyze", "catalog:Hex"]).0, EXIT_BAD_INPUT);
        assert_eq!(call(&["analyze", "/nonexistent.json"]).0, EXIT_BAD_INPUT);
        assert_eq!(call(&["analyze"]).0, EXIT_BAD_INPUT);
        assert_eq!(call(&["analyze", "catalog:V", "--bogus"]).0, EXIT_BAD_INPUT);
        assert_eq!(call(&["clarke", "--format", "csv"]).0, EXIT_BAD_INPUT);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("fixtures"));
    }

    #[test]
    fn fixtures_verify_passes() {
        let (code, out, _) = call(&["fixtures", "--verify"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("0 mismatch"));
    }

    #[test]
    fn catalog_listing() {
        let (code, out, _) = call(&["catalog", "--list", "--format", "text"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), catalog_names().len());
    }
}
