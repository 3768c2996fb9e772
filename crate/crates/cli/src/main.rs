use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use centroflow::diagnostics::{check_backward_limit_on_family, check_isoperimetric, check_mean_zero, family_members};
use centroflow::output::report_string;
use centroflow::scenario::{self, ScenarioConfig};
use centroflow::{centro_affine, preset, CurveFile, Error, Preset};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "centroflow", version, about = "Centro-affine invariants and the nonlocal centro-affine curve flow", args_conflicts_with_subcommands = true)]
struct Cli {
    /// Run every `*.json` scenario in this directory, one thread each.
    #[arg(long, value_name = "DIR")]
    sweep: Option<PathBuf>,

    /// Directory for relative output paths.
    #[arg(long, global = true, env = scenario::OUT_DIR_ENV, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Print L, E, ε, the φ range and the closed-curve verdicts of a curve file.
    Invariants { curve: PathBuf },
    /// Run a scenario and write its CSV, report and drawings.
    Evolve { config: PathBuf },
    /// Run a scenario and print only the verdict report.
    Verify { config: PathBuf },
    /// Check the explicit ellipse family on a decreasing list of times.
    Family {
        #[arg(long)]
        a0: f64,
        #[arg(long)]
        b0: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        times: Vec<f64>,
        #[arg(long, default_value_t = 256)]
        n: usize,
    },
    /// Write a preset, given as JSON, to a curve file.
    Preset {
        spec: String,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let result = match (&cli.sweep, cli.command) {
        (Some(dir), _) => sweep(dir, &out_dir),
        (None, Some(Command::Evolve { config })) => evolve(&config, &out_dir),
        (None, Some(Command::Verify { config })) => verify(&config),
        (None, Some(Command::Invariants { curve })) => invariants(&curve),
        (None, Some(Command::Family { a0, b0, times, n })) => family(a0, b0, &times, n),
        (None, Some(Command::Preset { spec, n, output })) => write_preset(&spec, n, &output),
        (None, None) => {
            eprintln!("nothing to do; pass a subcommand or --sweep (see --help)");
            Ok(1)
        }
    };
    match result {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit(1)
        }
    }
}

/// Config errors become exit 1 with the message on stderr.
fn run_one(config: &Path, out_dir: &Path) -> anyhow::Result<i32> {
    match scenario::run_scenario(config, out_dir) {
        Ok((code, outcome)) => {
            let failed: Vec<&str> = outcome
                .report
                .verdicts
                .iter()
                .filter(|v| !v.passed)
                .map(|v| v.name.as_str())
                .collect();
            let status = match (&outcome.report.error, failed.is_empty()) {
                (Some(e), _) => format!("flow error {} at t = {}", e.kind, e.t),
                (None, true) => "all verdicts passed".to_string(),
                (None, false) => format!("failed: {}", failed.join(", ")),
            };
            println!("{}: {status}", outcome.report.scenario);
            Ok(code)
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            Ok(1)
        }
        Err(e) => Err(e).with_context(|| format!("scenario {}", config.display())),
    }
}

fn evolve(config: &Path, out_dir: &Path) -> anyhow::Result<i32> {
    run_one(config, out_dir)
}

fn verify(config: &Path) -> anyhow::Result<i32> {
    let cfg = match ScenarioConfig::read(config) {
        Ok(c) => c,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let outcome = scenario::evaluate(&cfg, base)?;
    println!("{}", report_string(&outcome.report)?);
    Ok(outcome.exit_code())
}

fn sweep(dir: &Path, out_dir: &Path) -> anyhow::Result<i32> {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        bail!("no scenario files in {}", dir.display());
    }
    let codes: Vec<anyhow::Result<i32>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || run_one(c, out_dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("scenario worker panicked"))))
            .collect()
    });
    let mut worst = 0;
    for (path, code) in configs.iter().zip(codes) {
        match code {
            Ok(c) => worst = worst.max(c),
            Err(e) => {
                eprintln!("{}: {e:#}", path.display());
                worst = worst.max(1);
            }
        }
    }
    Ok(worst)
}

fn invariants(path: &Path) -> anyhow::Result<i32> {
    let curve = CurveFile::read(path)?.to_curve()?;
    let field = centro_affine(&curve)?;
    println!("N        {}", curve.len());
    println!("epsilon  {}", field.epsilon);
    println!("L        {:.15e}", field.perimeter());
    println!("L - 2pi  {:.6e}", field.perimeter() - std::f64::consts::TAU);
    println!("E        {:.15e}", field.energy());
    println!("phi      [{:.15e}, {:.15e}]", field.phi.min(), field.phi.max());
    let (iso, equality) = check_isoperimetric(&field);
    let verdicts = [check_mean_zero(&field), iso];
    for v in &verdicts {
        println!(
            "{} {}: measured {:e}, bound {:e}, tolerance {:e} ({})",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.measured,
            v.bound,
            v.tolerance,
            v.context
        );
    }
    if equality {
        println!("equality case: origin-centered ellipse");
    }
    Ok(if verdicts.iter().all(|v| v.passed) { 0 } else { 2 })
}

fn family(a0: f64, b0: f64, times: &[f64], n: usize) -> anyhow::Result<i32> {
    let members = family_members(a0, b0, times, n)?;
    println!("t,scale,area,area_closed_form,phi_sup0,phi_sup1,phi_sup2");
    for m in &members {
        println!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            m.t, m.scale, m.area, m.area_closed_form, m.phi_sup[0], m.phi_sup[1], m.phi_sup[2]
        );
    }
    let v = check_backward_limit_on_family(a0, b0, times, n)?;
    println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.name, v.context);
    Ok(if v.passed { 0 } else { 2 })
}

fn write_preset(spec: &str, n: usize, output: &Path) -> anyhow::Result<i32> {
    let p: Preset = serde_json::from_str(spec).context("parsing preset")?;
    let curve = preset(&p, n)?;
    CurveFile::from_curve(format!("{p:?}"), &curve).write(output)?;
    Ok(0)
}
