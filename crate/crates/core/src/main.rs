use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pic_lab::curvature::{curvature_analytic, curvature_fd};
use pic_lab::harness::{fmt17, report_json, report_table, resolve_metric, run_scenario, run_suite, to_json17, MetricSource, Overrides, RunOutcome, Status};
use pic_lab::classify_curvature;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Doc,
}

#[derive(Parser)]
#[command(name = "pic-lab", version, about = "Curvature computation and isotopy certification for structured 4-metrics")]
struct Cli {
    #[arg(long, value_enum, default_value = "table", global = true)]
    format: Format,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario document.
    Run { scenario: PathBuf },
    /// Run every *.toml scenario in a directory.
    Suite { dir: PathBuf },
    /// Curvature package of a metric document (or builtin:NAME) at a point.
    Curvature {
        metric: String,
        /// Comma-separated chart coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        #[arg(long)]
        fd: bool,
        #[arg(long, default_value_t = 1e-3)]
        mesh: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Surgery scenarios.
    Surgery {
        #[command(subcommand)]
        op: SurgeryOp,
    },
}

#[derive(Subcommand)]
enum SurgeryOp {
    VerifyProp51 { scenario: PathBuf },
    CapPath { scenario: PathBuf },
    DoubleIsotopy { scenario: PathBuf },
}

fn print_outcome(o: &RunOutcome, format: Format) {
    match (format, &o.report) {
        (Format::Doc, Some(r)) => print!("{}", report_json(r)),
        (Format::Table, Some(r)) => {
            println!("{}\tstatus {}\t{}", o.name, o.status.code(), o.message);
            print!("{}", report_table(r));
        }
        (_, None) => println!("{}\tstatus {}\t{}", o.name, o.status.code(), o.message),
    }
    for f in &o.written {
        eprintln!("wrote {}", f.display());
    }
}

fn surgery(path: &Path, kind: &str, overrides: &Overrides, format: Format) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return ExitCode::from(Status::SchemaError.code() as u8);
        }
    };
    let base = path.parent().unwrap_or(Path::new("."));
    match pic_lab::harness::prepare(&text, base) {
        Ok(p) if p.scenario.operation.kind() != kind => {
            eprintln!("scenario runs '{}', expected '{kind}'", p.scenario.operation.kind());
            return ExitCode::from(Status::SchemaError.code() as u8);
        }
        _ => {}
    }
    let o = run_scenario(path, overrides);
    print_outcome(&o, format);
    ExitCode::from(o.status.code() as u8)
}

fn curvature(metric: &str, point: &[f64], fd: bool, mesh: f64, lambda: f64, format: Format) -> ExitCode {
    let m = match resolve_metric(&MetricSource::Named(metric.to_string()), Path::new(".")) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(Status::SchemaError.code() as u8);
        }
    };
    let Ok(x) = <[f64; 4]>::try_from(point) else {
        eprintln!("--point needs exactly four coordinates, got {}", point.len());
        return ExitCode::from(Status::SchemaError.code() as u8);
    };
    let blocks = if fd { curvature_fd(&m, x, mesh) } else { curvature_analytic(&m, x) };
    let result = blocks.and_then(|b| classify_curvature(&b, lambda).map(|r| (b, r)));
    let (b, r) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(Status::NumericFailure.code() as u8);
        }
    };
    match format {
        Format::Doc => {
            #[derive(serde::Serialize)]
            struct Doc<'a> {
                point: [f64; 4],
                blocks: &'a pic_lab::CurvatureBlocks,
                conditions: &'a pic_lab::ConditionReport,
                operator_eigenvalues: [f64; 6],
            }
            print!("{}", to_json17(&Doc { point: x, blocks: &b, conditions: &r, operator_eigenvalues: b.operator_eigenvalues() }));
        }
        Format::Table => {
            let row = |name: &str, v: &[f64]| println!("{name:<22}{}", v.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(" "));
            row("operator eigenvalues", &b.operator_eigenvalues());
            row("a", &b.a);
            row("b", &b.b);
            row("c", &b.c);
            row("scalar", &[b.scalar]);
            row("sigma", &[b.sigma]);
            row("pic margin", &[r.pic_margin]);
            row("pco margin", &[r.pco_margin]);
            row("pinching margins", &r.pinching_margins);
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(Status::NumericFailure.code() as u8);
        }
    }
    let overrides = Overrides { seed: cli.seed };
    match &cli.command {
        Command::Run { scenario } => {
            let o = run_scenario(scenario, &overrides);
            print_outcome(&o, cli.format);
            ExitCode::from(o.status.code() as u8)
        }
        Command::Suite { dir } => match run_suite(dir, &overrides) {
            Ok((status, outcomes)) => {
                for o in &outcomes {
                    println!("{}\tstatus {}\t{}", o.name, o.status.code(), o.message);
                }
                ExitCode::from(status.code() as u8)
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(Status::SchemaError.code() as u8)
            }
        },
        Command::Curvature { metric, point, fd, mesh, lambda } => curvature(metric, point, *fd, *mesh, *lambda, cli.format),
        Command::Surgery { op } => match op {
            SurgeryOp::VerifyProp51 { scenario } => surgery(scenario, "verify_prop51", &overrides, cli.format),
            SurgeryOp::CapPath { scenario } => surgery(scenario, "cap_path", &overrides, cli.format),
            SurgeryOp::DoubleIsotopy { scenario } => surgery(scenario, "double_isotopy", &overrides, cli.format),
        },
    }
}
