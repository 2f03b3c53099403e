mod input;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use input::{parse_box, parse_param, read_equation_file, InputError, SystemSpec};
use wave_equiv::classify::{
    classify, explain_json, explain_text, AttachedInvariants, ClassificationReport, ClassifyConfig, Subclass,
};
use wave_equiv::expr::{Var, ZeroOracle};
use wave_equiv::invariants::WaveSystem;
use wave_equiv::manifold::{decide_equivalence, sample_cloud, ClassifyingCloud, EquivalenceConfig, Verdict};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "wave-equiv",
    version,
    about = "Classify u_t = a(x,u) v_x, v_t = b(x,u) u_x up to contact transformations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign the subclass and explain the decision.
    Classify {
        #[command(flatten)]
        systems: SystemArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Write the classifying cloud as CSV.
        #[arg(long = "cloud-out", value_name = "PATH.csv")]
        cloud_out: Option<PathBuf>,
    },
    /// Decide whether two systems are equivalent.
    Equivalent {
        #[command(flatten)]
        systems: SystemArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the invariants of the subclass and their values at sample points.
    Invariants {
        #[command(flatten)]
        systems: SystemArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Number of sample points in the value table.
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Coefficient a(x,u); repeat with --b for a second system.
    #[arg(long, allow_hyphen_values = true)]
    a: Vec<String>,
    /// Coefficient b(x,u).
    #[arg(long, allow_hyphen_values = true)]
    b: Vec<String>,
    /// Equation file with `a = ...`, `b = ...`, `param NAME = VALUE`, `box VAR = LO:HI`.
    #[arg(long)]
    file: Vec<PathBuf>,
    /// Parameter binding NAME=VALUE.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Sampling range VAR=LO:HI for x, u, u_x or v_x.
    #[arg(long = "box", value_name = "VAR=LO:HI", value_parser = parse_box)]
    boxes: Vec<(Var, f64, f64)>,
}

#[derive(Args)]
struct RunArgs {
    /// Samples per classifying cloud.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Equivalence tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Relative threshold of the zero oracle.
    #[arg(long = "zero-tol", default_value_t = 1e-9)]
    zero_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Failure {
        Failure::Input(e.0)
    }
}

impl From<wave_equiv::Error> for Failure {
    fn from(e: wave_equiv::Error) -> Failure {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify { systems, run, cloud_out } => cmd_classify(systems, run, cloud_out.as_ref()),
        Command::Equivalent { systems, run } => cmd_equivalent(systems, run),
        Command::Invariants { systems, run, k } => cmd_invariants(systems, run, *k),
    };
    match result {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_systems(args: &SystemArgs, expected: usize) -> Result<Vec<WaveSystem>, Failure> {
    if args.a.len() != args.b.len() {
        return Err(Failure::Input("every --a needs a matching --b".into()));
    }
    let mut specs = Vec::new();
    for path in &args.file {
        specs.push(read_equation_file(path)?);
    }
    for (k, (a, b)) in args.a.iter().zip(&args.b).enumerate() {
        specs.push(SystemSpec {
            origin: format!("system {}", specs.len() + k + 1),
            a: a.clone(),
            b: b.clone(),
            ..SystemSpec::default()
        });
    }
    if specs.len() != expected {
        return Err(Failure::Input(format!(
            "expected {expected} system(s) from --file or --a/--b, got {}",
            specs.len()
        )));
    }
    specs.iter().map(|s| s.build(&args.params, &args.boxes).map_err(Failure::from)).collect()
}

fn check_run(run: &RunArgs) -> Result<ClassifyConfig, Failure> {
    if !(run.tol > 0.0 && run.zero_tol > 0.0) {
        return Err(Failure::Input("tolerances must be positive".into()));
    }
    if run.n < 50 {
        return Err(Failure::Input(format!("--n must be at least 50, got {}", run.n)));
    }
    Ok(ClassifyConfig { oracle: ZeroOracle::default().with_seed(run.seed).with_zeta(run.zero_tol), reference: None })
}

fn has_cloud(tag: Subclass) -> bool {
    matches!(tag, Subclass::P1 | Subclass::P2 | Subclass::P3)
}

fn cloud_json(cloud: &ClassifyingCloud) -> Value {
    json!({
        "map": cloud.map,
        "names": cloud.names,
        "samples": cloud.len(),
        "attempts": cloud.attempts,
        "seed": cloud.seed,
        "rejections": cloud.rejections,
        "dimension": cloud.dimension,
        "order_bound": cloud.order_bound,
    })
}

fn cloud_text(cloud: &ClassifyingCloud) -> String {
    let mut s = format!(
        "classifying cloud: {} ({}), {} of {} candidates accepted, rho = {}\n",
        cloud.map.label(),
        cloud.names.join(", "),
        cloud.len(),
        cloud.attempts,
        cloud.dimension.rho
    );
    for (guard, count) in &cloud.rejections {
        let _ = writeln!(s, "  rejected {count}: {guard}");
    }
    s
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn cmd_classify(args: &SystemArgs, run: &RunArgs, cloud_out: Option<&PathBuf>) -> Result<(String, u8), Failure> {
    let cfg = check_run(run)?;
    let sys = load_systems(args, 1)?.remove(0);
    let mut report = classify(&sys, &cfg)?;
    let mut cloud = None;
    if has_cloud(report.tag) {
        match sample_cloud(&report, &sys.sample_box, run.n, run.seed) {
            Ok(c) => {
                if matches!(report.tag, Subclass::P1 | Subclass::P2) {
                    report.symmetry = c.symmetry_note();
                }
                cloud = Some(c);
            }
            Err(e) if cloud_out.is_some() => return Err(e.into()),
            Err(e) => report.notes.push(format!("classifying cloud unavailable: {e}")),
        }
    }
    if let Some(path) = cloud_out {
        let c = cloud.as_ref().ok_or_else(|| {
            Failure::Input(format!("no classifying cloud for {}: the classifying manifold is a point", report.tag))
        })?;
        let file =
            std::fs::File::create(path).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
        c.write_csv(file)?;
    }
    let out = match run.format {
        Format::Text => {
            let mut s = explain_text(&report);
            if let Some(c) = &cloud {
                s.push_str(&cloud_text(c));
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "classify",
            "report": explain_json(&report),
            "cloud": cloud.as_ref().map(cloud_json),
        })),
    };
    Ok((out, 0))
}

fn cmd_equivalent(args: &SystemArgs, run: &RunArgs) -> Result<(String, u8), Failure> {
    let cfg = check_run(run)?;
    let systems = load_systems(args, 2)?;
    let ra = classify(&systems[0], &cfg)?;
    let rb = classify(&systems[1], &cfg)?;
    let eq = EquivalenceConfig { n: run.n, seed: run.seed, tol: run.tol };
    let v = decide_equivalence(&ra, &rb, &eq)?;
    let code = match v.verdict {
        Verdict::Equivalent => 0,
        Verdict::Inequivalent => 3,
        Verdict::ConsistentUnknown => 4,
    };
    let out = match run.format {
        Format::Text => {
            let mut s = format!("verdict: {:?}\n", v.verdict);
            for (k, r) in [&ra, &rb].into_iter().enumerate() {
                let _ = writeln!(s, "system {}: {} (a = {}, b = {})", k + 1, r.tag, r.system.a, r.system.b);
            }
            let ev = &v.evidence;
            let _ = writeln!(s, "method: {}", ev.method);
            if let Some(d) = ev.max_deviation {
                let _ = writeln!(s, "max deviation: {d:e} (tolerance {:e})", ev.tolerance);
            }
            if let Some((a, b)) = ev.m1 {
                let _ = writeln!(s, "M1: {a} vs {b}");
            }
            if let Some((lo, hi, frac)) = ev.m1_overlap {
                let _ = writeln!(s, "common M1 range: [{lo}, {hi}], coverage {frac:.3}");
            }
            if let Some(h) = ev.hausdorff {
                let _ = writeln!(s, "nearest-neighbour distance: {h:e}");
            }
            if let Some((fa, fb)) = ev.overlap_fraction {
                let _ = writeln!(s, "on-manifold fractions: {fa:.3}, {fb:.3}");
            }
            for n in &ev.notes {
                let _ = writeln!(s, "note: {n}");
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "equivalent",
            "systems": [summary(&ra), summary(&rb)],
            "verdict": v.verdict,
            "evidence": v.evidence,
        })),
    };
    Ok((out, code))
}

fn summary(r: &ClassificationReport) -> Value {
    json!({
        "a": r.system.a,
        "b": r.system.b,
        "F": r.system.f,
        "G": r.system.g,
        "tag": r.tag,
        "M1": r.m1,
    })
}

fn cmd_invariants(args: &SystemArgs, run: &RunArgs, k: usize) -> Result<(String, u8), Failure> {
    let cfg = check_run(run)?;
    let sys = load_systems(args, 1)?.remove(0);
    let report = classify(&sys, &cfg)?;
    let mut notes = report.notes.clone();
    let exprs: Vec<(String, String)> = match &report.invariants {
        AttachedInvariants::CaseA(inv) => inv.map().into_iter().map(|(n, e)| (n.into(), e.to_string())).collect(),
        AttachedInvariants::CaseB(inv) => inv.map().into_iter().map(|(n, e)| (n.into(), e.to_string())).collect(),
        AttachedInvariants::FOnly(inv) if report.tag == Subclass::P3 => {
            let mut v: Vec<(String, String)> =
                inv.map().unwrap_or_default().into_iter().map(|(n, e)| (n.into(), e.to_string())).collect();
            if let Some(m3) = &inv.m3 {
                v.push(("M3".into(), m3.to_string()));
            }
            v
        }
        _ => Vec::new(),
    };
    match report.tag {
        Subclass::P4 => notes.push("M1 is constant and every other invariant vanishes".into()),
        Subclass::P5 => notes.push("no nonconstant invariants; equivalent to the linear wave system".into()),
        _ => {}
    }
    let cloud = if has_cloud(report.tag) {
        Some(sample_cloud(&report, &sys.sample_box, run.n.max(k), run.seed)?)
    } else {
        None
    };
    let rows: Vec<&wave_equiv::manifold::Sample> = cloud.iter().flat_map(|c| c.samples.iter().take(k)).collect();
    let out = match run.format {
        Format::Text => {
            let mut s = format!("subclass: {}\n", report.tag);
            if let Some(m1) = report.m1 {
                let _ = writeln!(s, "M1 = {m1}");
            }
            for (name, e) in &exprs {
                let _ = writeln!(s, "{name} = {e}");
            }
            if let Some(c) = &cloud {
                let mut header = vec!["x", "u", "u_x", "v_x"];
                header.extend(c.names.iter().map(String::as_str));
                let _ = writeln!(s, "{}", header.iter().map(|h| format!("{h:>14}")).collect::<String>());
                for row in &rows {
                    let line: String = row.point.iter().chain(&row.image).map(|v| format!("{v:>14.6e}")).collect();
                    let _ = writeln!(s, "{line}");
                }
            }
            for n in &notes {
                let _ = writeln!(s, "note: {n}");
            }
            s
        }
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "invariants",
            "tag": report.tag,
            "M1": report.m1,
            "invariants": exprs.iter().map(|(n, e)| json!({"name": n, "expr": e})).collect::<Vec<_>>(),
            "names": cloud.as_ref().map(|c| c.names.clone()),
            "samples": rows.iter().map(|r| json!({"point": r.point, "values": r.image})).collect::<Vec<_>>(),
            "notes": notes,
        })),
    };
    Ok((out, 0))
}
