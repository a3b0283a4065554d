//! `fragcgp` command-line interface.

mod config;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fragcgp::algebra::{decompose, DecomposeOptions};
use fragcgp::cgp::{haar_avg_bounds, max_cgp_bound};
use fragcgp::dynamics::{long_time_avg_cgp, TimeWindow, DEFAULT_N_TIMES};
use fragcgp::haar::mc_haar_cgp;
use fragcgp::io::{self, fmt_num, McRow, TimeRow};
use fragcgp::models::{analytic_sectors, build, export_coordinates, krylov_graph_decompose, sample_couplings};
use fragcgp::scaling::{compare_to_bound, family_decomposition, fit_points, fit_power_law, sweep, SweepRecord};
use fragcgp::{Decomposition, Error, Family, ModelId};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "FRAGCGP_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "fragcgp",
    version,
    about = "Krylov-sector counts and coherence generating power of spin-chain families",
    after_help = "Options may also come from `--config FILE` (key = value lines); flags override the file.\n\
                  Threads: FRAGCGP_THREADS (or RAYON_NUM_THREADS). Exit codes: 0 ok, 1 numerical failure, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose the algebra generated by a model family and report K.
    #[command(args_override_self = true)]
    Decompose(DecomposeArgs),
    /// Long-time average of the CGP in the adapted basis.
    #[command(args_override_self = true)]
    EvolveCgp(EvolveArgs),
    /// Monte Carlo block-Haar CGP average against the analytic value.
    #[command(args_override_self = true)]
    Haar(HaarArgs),
    /// Long-time averages over a list of system sizes.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Power-law fit `f = A d^B` of a sweep CSV.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Log-log plot columns from a sweep CSV.
    #[command(args_override_self = true)]
    ExportPlotdata(ExportArgs),
    /// Coordinate export of the Hamiltonian and its generators.
    #[command(args_override_self = true)]
    ModelExport(ModelExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    #[value(alias = "structured-text")]
    Text,
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelId,
    #[arg(long = "L")]
    l: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long = "window-min", default_value_t = TimeWindow::default().t_min)]
    window_min: f64,
    #[arg(long = "window-max", default_value_t = TimeWindow::default().t_max)]
    window_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Random-element block diagonalization of the generated algebra.
    Numeric,
    /// Connected components of the product-state graph (XXZ, t-Jz).
    Graph,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "numeric")]
    method: Method,
    /// Also write the adapted basis W in coordinate form.
    #[arg(long = "export-w")]
    export_w: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "n-times", default_value_t = DEFAULT_N_TIMES)]
    n_times: usize,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct HaarArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "n-samples", default_value_t = 2000)]
    n_samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = parse_model)]
    model: ModelId,
    /// Comma-separated sizes; defaults to the model's desk-scale range.
    #[arg(long = "L-list")]
    l_list: Option<String>,
    /// Comma-separated seeds.
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long = "n-times", default_value_t = DEFAULT_N_TIMES)]
    n_times: usize,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Sweep CSV to fit.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Sweep CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ModelExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse::<ModelId>().map_err(|e| e.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| Failure::Usage(format!("invalid {what} entry {x:?}"))))
        .collect()
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(_) | Error::UnsupportedSize { .. } | Error::SizeCap { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

/// Primary artifact plus the one-line summary.
struct Outcome {
    artifact: Option<Vec<u8>>,
    summary: String,
}

fn window(w: &WindowArgs) -> Result<TimeWindow, Failure> {
    if w.window_min < 0.0 || w.window_max <= w.window_min {
        return Err(Failure::Usage(format!("window [{}, {}] must satisfy 0 <= min < max", w.window_min, w.window_max)));
    }
    Ok(TimeWindow::new(w.window_min, w.window_max)?)
}

fn positive(n: usize, name: &str) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Usage(format!("--{name} must be positive")));
    }
    Ok(())
}

fn family(m: &ModelArgs) -> Result<Family, Failure> {
    Ok(build::<f64>(&sample_couplings(m.model, m.l, m.seed)?)?)
}

fn sector_rows(dec: &Decomposition) -> Vec<Vec<String>> {
    dec.sectors.iter().map(|s| vec![s.label.to_string(), s.n.to_string(), s.d.to_string()]).collect()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> fragcgp::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn report_bytes(v: &serde_json::Value) -> Result<Vec<u8>, Failure> {
    Ok(io::to_report(v)?.into_bytes())
}

fn run_decompose(a: &DecomposeArgs) -> Result<Outcome, Failure> {
    let fam = family(&a.model)?;
    let dec = match a.method {
        Method::Numeric => decompose(&fam.generator_ops(), &DecomposeOptions::seeded(a.model.seed))?,
        Method::Graph => {
            let g = krylov_graph_decompose(&fam);
            if !g.is_krylov {
                return Err(Failure::Usage(format!("--method graph does not apply to {}", a.model.model.name())));
            }
            Decomposition::from_product_components(fam.d, &g.components)?
        }
    };
    if let Some(p) = &a.export_w {
        std::fs::write(p, dec.export_w())?;
    }
    let analytic_k = analytic_sectors(a.model.model, a.model.l).ok().map(|t| t.k);
    let artifact = match a.output.format {
        Format::Csv => csv_bytes(|w| io::write_table(w, &["J", "n", "d"], &sector_rows(&dec)))?,
        Format::Text => report_bytes(&json!({
            "model": a.model.model.name(),
            "L": a.model.l,
            "seed": a.model.seed,
            "decomposition": dec.report(),
            "analytic_K": analytic_k,
            "sum_rules_hold": dec.sum_rules_hold(),
            "max_cgp_bound": max_cgp_bound(&dec),
        }))?,
    };
    Ok(Outcome {
        artifact: Some(artifact),
        summary: format!("decompose model={} L={} d={} K={} sectors={}", a.model.model.name(), a.model.l, dec.d(), dec.k, dec.d_z),
    })
}

fn run_evolve(a: &EvolveArgs) -> Result<Outcome, Failure> {
    if a.n_times < 2 {
        return Err(Failure::Usage("--n-times must be at least 2".into()));
    }
    let w = window(&a.window)?;
    let fam = family(&a.model)?;
    let dec = family_decomposition(&fam, a.model.seed)?;
    let (avg, samples) = long_time_avg_cgp(&fam, &dec, a.n_times, w, a.model.seed)?;
    let k = dec.k as f64;
    if let Some(s) = samples.iter().find(|s| s.f < k - 1e-8) {
        return Err(Failure::Numeric(format!("f = {} below K = {} at t = {}", s.f, dec.k, s.t)));
    }
    let rows: Vec<TimeRow> = samples
        .iter()
        .map(|s| TimeRow { model: a.model.model, l: a.model.l, d: fam.d, k: dec.k, seed: a.model.seed, t: s.t, f: s.f, cgp: s.cgp })
        .collect();
    let artifact = match a.output.format {
        Format::Csv => csv_bytes(|w| io::write_time_rows(w, &rows))?,
        Format::Text => report_bytes(&json!({
            "model": a.model.model.name(),
            "L": a.model.l,
            "d": fam.d,
            "K": dec.k,
            "max_cgp_bound": max_cgp_bound(&dec),
            "average": avg,
            "min_f": samples.iter().map(|s| s.f).fold(f64::INFINITY, f64::min),
        }))?,
    };
    Ok(Outcome {
        artifact: Some(artifact),
        summary: format!(
            "evolve-cgp model={} L={} K={} mean_f={} mean_cgp={}",
            a.model.model.name(),
            a.model.l,
            dec.k,
            fmt_num(avg.mean_f),
            fmt_num(avg.mean_cgp)
        ),
    })
}

fn run_haar(a: &HaarArgs) -> Result<Outcome, Failure> {
    if a.n_samples < 2 {
        return Err(Failure::Usage("--n-samples must be at least 2".into()));
    }
    let fam = family(&a.model)?;
    let dec = family_decomposition(&fam, a.model.seed)?;
    let (est, samples) = mc_haar_cgp(&dec, a.n_samples, a.model.seed)?;
    let bound = max_cgp_bound(&dec);
    if let Some(s) = samples.iter().find(|s| s.cgp > bound + 1e-10) {
        return Err(Failure::Numeric(format!("sample {} has cgp {} above the bound {}", s.sample, s.cgp, bound)));
    }
    let id = format!("{}-L{}-s{}", a.model.model.name(), a.model.l, a.model.seed);
    let artifact = match a.output.format {
        Format::Csv => {
            let rows: Vec<McRow> = samples.iter().map(|s| McRow { decomposition: id.clone(), sample: s.sample, cgp: s.cgp }).collect();
            csv_bytes(|w| io::write_mc_rows(w, &rows))?
        }
        Format::Text => {
            let (lo, hi) = haar_avg_bounds(&dec);
            report_bytes(&json!({
                "decomposition": id,
                "K": dec.k,
                "d": dec.d(),
                "mean": est.mean,
                "stderr": est.stderr,
                "analytic": est.analytic_ref,
                "n": est.n_samples,
                "seed": est.seed,
                "bounds": [lo, hi],
                "within_3_stderr": est.agrees(3.0),
            }))?
        }
    };
    Ok(Outcome {
        artifact: Some(artifact),
        summary: format!(
            "haar model={} L={} K={} mean={} stderr={} analytic={}",
            a.model.model.name(),
            a.model.l,
            dec.k,
            fmt_num(est.mean),
            fmt_num(est.stderr),
            fmt_num(est.analytic_ref)
        ),
    })
}

fn default_sizes(model: ModelId) -> Vec<usize> {
    match model {
        ModelId::Xxz => (2..=10).collect(),
        ModelId::Tjz => (2..=6).collect(),
        ModelId::Tl => vec![2, 4, 6],
    }
}

fn fit_report(records: &[SweepRecord]) -> Result<serde_json::Value, Failure> {
    let points = fit_points(records);
    if points.len() < 3 {
        return Ok(serde_json::Value::Null);
    }
    let fit = fit_power_law(&points)?;
    let cmp = compare_to_bound(records, &fit)?;
    Ok(json!({ "fit": fit, "comparison": cmp }))
}

fn run_sweep(a: &SweepArgs) -> Result<Outcome, Failure> {
    positive(a.n_times, "n-times")?;
    if a.n_times < 2 {
        return Err(Failure::Usage("--n-times must be at least 2".into()));
    }
    let sizes = match &a.l_list {
        Some(s) => parse_list::<usize>(s, "L-list")?,
        None => default_sizes(a.model),
    };
    let seeds = parse_list::<u64>(&a.seed, "seed")?;
    let w = window(&a.window)?;
    let records = sweep(a.model, &sizes, &seeds, a.n_times, w)?;
    if let Some(r) = records.iter().find(|r| r.mean_f < r.k as f64 - 1e-6) {
        return Err(Failure::Numeric(format!("mean_f = {} below K = {} at L = {}", r.mean_f, r.k, r.l)));
    }
    let fit = fit_report(&records)?;
    let artifact = match a.output.format {
        Format::Csv => csv_bytes(|w| io::write_sweep(w, &records))?,
        Format::Text => report_bytes(&json!({ "records": records, "scaling": fit }))?,
    };
    let last = records.last().expect("non-empty sweep");
    let exponent = fit.get("fit").and_then(|f| f.get("B")).and_then(|b| b.as_f64());
    Ok(Outcome {
        artifact: Some(artifact),
        summary: format!(
            "sweep model={} L={} K={} mean_f={} B={}",
            a.model.name(),
            sizes.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
            last.k,
            fmt_num(last.mean_f),
            exponent.map(fmt_num).unwrap_or_else(|| "n/a".into())
        ),
    })
}

fn read_sweep_file(path: &PathBuf) -> Result<Vec<SweepRecord>, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(io::read_sweep(file)?)
}

fn run_fit(a: &FitArgs) -> Result<Outcome, Failure> {
    let records = read_sweep_file(&a.input)?;
    let fit = fit_power_law(&fit_points(&records))?;
    let cmp = compare_to_bound(&records, &fit)?;
    let artifact = match a.output.format {
        Format::Csv => csv_bytes(|w| {
            io::write_table(
                w,
                &["A", "B", "B_stderr", "rmse_raw", "rmse_log", "n_points", "method"],
                &[vec![
                    fmt_num(fit.a),
                    fmt_num(fit.b),
                    fmt_num(fit.b_stderr),
                    fmt_num(fit.rmse_raw),
                    fmt_num(fit.rmse_log),
                    fit.n_points.to_string(),
                    json!(fit.method).as_str().unwrap_or_default().to_string(),
                ]],
            )
        })?,
        Format::Text => report_bytes(&json!({ "fit": fit, "comparison": cmp }))?,
    };
    Ok(Outcome {
        artifact: Some(artifact),
        summary: format!(
            "fit model={} n_points={} B={} B_stderr={} K_exponent={}",
            cmp.model.name(),
            fit.n_points,
            fmt_num(fit.b),
            fmt_num(fit.b_stderr),
            fmt_num(cmp.analytic_k_exponent)
        ),
    })
}

fn run_export(a: &ExportArgs) -> Result<Outcome, Failure> {
    let records = read_sweep_file(&a.input)?;
    let paths = io::export_plotdata(&records, &a.out)?;
    Ok(Outcome { artifact: None, summary: format!("export-plotdata records={} files={}", records.len(), paths.len()) })
}

fn run_model_export(a: &ModelExportArgs) -> Result<Outcome, Failure> {
    let fam = family(&a.model)?;
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("H.coo"), export_coordinates(&fam.hamiltonian()))?;
    for g in &fam.generators {
        std::fs::write(a.out.join(format!("{}.coo", g.label)), export_coordinates(&g.op))?;
    }
    let couplings: Vec<_> = fam.couplings.values.iter().map(|c| vec![c.label.clone(), fmt_num(c.value)]).collect();
    let mut f = std::fs::File::create(a.out.join("couplings.csv"))?;
    io::write_table(&mut f, &["label", "value"], &couplings)?;
    io::write_report(&mut std::fs::File::create(a.out.join("model.json"))?, &fam.spec())?;
    Ok(Outcome {
        artifact: None,
        summary: format!("model-export model={} L={} d={} generators={}", a.model.model.name(), a.model.l, fam.d, fam.generators.len()),
    })
}

fn out_path(c: &Command) -> Option<&PathBuf> {
    match c {
        Command::Decompose(a) => a.output.out.as_ref(),
        Command::EvolveCgp(a) => a.output.out.as_ref(),
        Command::Haar(a) => a.output.out.as_ref(),
        Command::Sweep(a) => a.output.out.as_ref(),
        Command::Fit(a) => a.output.out.as_ref(),
        Command::ExportPlotdata(_) | Command::ModelExport(_) => None,
    }
}

fn dispatch(c: &Command) -> Result<Outcome, Failure> {
    match c {
        Command::Decompose(a) => run_decompose(a),
        Command::EvolveCgp(a) => run_evolve(a),
        Command::Haar(a) => run_haar(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Fit(a) => run_fit(a),
        Command::ExportPlotdata(a) => run_export(a),
        Command::ModelExport(a) => run_model_export(a),
    }
}

fn thread_count() -> Result<Option<usize>, Failure> {
    let raw = std::env::var(THREADS_ENV).or_else(|_| std::env::var("RAYON_NUM_THREADS"));
    match raw {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn merged_args() -> Result<Vec<String>, Failure> {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match config::take_config_flag(&mut args).map_err(Failure::Usage)? {
        Some(p) => Some(config::load_config(std::path::Path::new(&p)).map_err(Failure::Usage)?),
        None => None,
    };
    let cmd = Cli::command();
    let subs: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let accepts = |sub: &str, key: &str| {
        cmd.find_subcommand(sub).is_some_and(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };
    let known = |key: &str| subs.iter().any(|s| accepts(s, key));
    let mut merged = config::merge_args(&args, cfg.as_ref(), &subs, accepts, known).map_err(Failure::Usage)?;
    merged.insert(0, "fragcgp".into());
    Ok(merged)
}

fn run() -> Result<(), Failure> {
    let argv = merged_args()?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            e.print().ok();
            std::process::exit(code);
        }
    };
    if let Some(n) = thread_count()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    let outcome = dispatch(&cli.command)?;
    match (out_path(&cli.command), &outcome.artifact) {
        (Some(p), Some(bytes)) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, bytes)?;
            println!("{}", outcome.summary);
        }
        (None, Some(bytes)) => {
            std::io::stdout().write_all(bytes)?;
            eprintln!("{}", outcome.summary);
        }
        (_, None) => println!("{}", outcome.summary),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
