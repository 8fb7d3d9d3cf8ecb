use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use difflstm::dynamics::{
    generate_lorenz, generate_mackey_glass, generate_rossler, LorenzParams, MackeyGlassParams, RosslerParams, Series,
};
use difflstm::harness::{
    compare_to_reference, emit_reports, fit_run, lambda_sweep, prepare, run_experiment, AggregateReport,
    ExperimentConfig, ReferenceTable, ReportFormat, RunReport,
};
use difflstm::network::{gradcheck, save_model, GradcheckConfig};
use difflstm::preprocess::{
    build_windows, false_nearest_neighbors, read_series_csv, read_two_column_csv, savitzky_golay_derivative,
    write_two_column_csv, CsvOptions, EmbeddingSpec, FnnConfig, SavGolSpec, WindowedDataset,
};
use difflstm::Error;

const OUTPUT_DIR_ENV: &str = "DIFFLSTM_OUTPUT_DIR";

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_REFERENCE_FAIL: u8 = 4;

#[derive(Parser)]
#[command(name = "difflstm", version, about = "Differential LSTM forecasting of chaotic time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    MackeyGlass,
    Lorenz,
    Rossler,
}

#[derive(Clone, Copy, ValueEnum)]
enum Diff {
    Analytic,
    Savgol,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a chaotic system and write `value,differential` CSV.
    Generate {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Integrator step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        sample_every: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        /// Signed linear coefficient of Mackey-Glass.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Build delay-embedding windows from a CSV series.
    Prepare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "D", default_value_t = 5)]
        dim: usize,
        #[arg(long = "T", default_value_t = 1)]
        lag: usize,
        #[arg(long = "H", default_value_t = 10)]
        horizon: usize,
        /// `analytic` reads the second CSV column; `savgol` estimates it.
        #[arg(long, value_enum, default_value = "analytic")]
        diff: Diff,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 3)]
        polyorder: usize,
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
        /// Default is JSON unless `--out` ends in `.csv`.
        #[arg(long, value_enum)]
        format: Option<DatasetFormat>,
    },
    /// Train one model (seed `base_seed`), save it and report its errors.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Model file; defaults to `model.json` in the output directory.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Run all seeds of an experiment, emit reports, optionally compare
    /// against a reference table.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Comma-separated subset of json, csv, plotcsv.
        #[arg(long, default_value = "json,csv,plotcsv", value_delimiter = ',')]
        formats: Vec<String>,
        /// Run once per listed lambda, each into its own subdirectory.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda_sweep: Option<Vec<f64>>,
    },
    /// Compare backprop gradients with central differences on toy models.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        draws: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Estimate the embedding dimension by false nearest neighbours.
    Fnn {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        dmax: usize,
        #[arg(long, default_value_t = 1)]
        lag: usize,
        #[arg(long, default_value_t = 10.0)]
        rtol: f64,
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        theiler: usize,
        #[arg(long, default_value_t = 0)]
        column: usize,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numeric() { EXIT_NUMERIC } else { EXIT_CONFIG };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate {
            system,
            out,
            n_samples,
            dt,
            sample_every,
            warmup,
            beta,
        } => generate(system, &out, n_samples, dt, sample_every, warmup, beta),
        Command::Prepare {
            input,
            dim,
            lag,
            horizon,
            diff,
            window,
            polyorder,
            column,
            dt,
            out,
            format,
        } => {
            let spec = EmbeddingSpec { dim, lag, horizon };
            let sg = SavGolSpec {
                window,
                polyorder,
                dt: None,
            };
            prepare_cmd(&input, spec, diff, sg, column, dt, &out, format)
        }
        Command::Train { config, model_out } => train_cmd(&config, model_out.as_deref()),
        Command::Benchmark {
            config,
            reference,
            formats,
            lambda_sweep,
        } => benchmark(&config, reference.as_deref(), &formats, lambda_sweep.as_deref()),
        Command::Gradcheck {
            seed,
            draws,
            tolerance,
        } => gradcheck_cmd(seed, draws, tolerance),
        Command::Fnn {
            input,
            dmax,
            lag,
            rtol,
            threshold,
            theiler,
            column,
        } => fnn_cmd(
            &input,
            FnnConfig {
                lag,
                d_max: dmax,
                rtol,
                threshold,
                theiler,
            },
            column,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn generate(
    system: System,
    out: &Path,
    n_samples: Option<usize>,
    dt: Option<f64>,
    sample_every: Option<usize>,
    warmup: Option<usize>,
    beta: Option<f64>,
) -> CliResult {
    macro_rules! apply {
        ($p:expr) => {{
            let mut p = $p;
            if let Some(v) = n_samples {
                p.n_samples = v;
            }
            if let Some(v) = dt {
                p.dt = v;
            }
            if let Some(v) = sample_every {
                p.sample_every = v;
            }
            if let Some(v) = warmup {
                p.warmup = v;
            }
            p
        }};
    }
    if beta.is_some() && !matches!(system, System::MackeyGlass) {
        return Err(fail(EXIT_CONFIG, "--beta applies to mackey-glass only"));
    }
    let (v, d) = match system {
        System::MackeyGlass => {
            let mut p = apply!(MackeyGlassParams::default());
            if let Some(b) = beta {
                p.beta = b;
            }
            generate_mackey_glass(&p)?
        }
        System::Lorenz => generate_lorenz(&apply!(LorenzParams::default()))?,
        System::Rossler => generate_rossler(&apply!(RosslerParams::default()))?,
    };
    write_two_column_csv(out, &v, &d)?;
    println!("wrote {} samples to {}", v.len(), out.display());
    Ok(())
}

fn load_pair(input: &Path, diff: Diff, sg: SavGolSpec, column: usize, dt: f64) -> Result<(Series, Series), Failure> {
    Ok(match diff {
        Diff::Analytic => read_two_column_csv(input, dt)?,
        Diff::Savgol => {
            let opts = CsvOptions {
                column,
                dt,
                ..Default::default()
            };
            let v = read_series_csv(input, &opts)?;
            let d = savitzky_golay_derivative(&v, &sg)?;
            (v, d)
        }
    })
}

fn dataset_csv(ds: &WindowedDataset) -> String {
    let mut out = String::new();
    for (name, m) in [("X", &ds.x), ("Xd", &ds.xd), ("Y", &ds.y), ("Yd", &ds.yd)] {
        out.push_str(&format!("# {name}\n"));
        for row in m.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn prepare_cmd(
    input: &Path,
    spec: EmbeddingSpec,
    diff: Diff,
    sg: SavGolSpec,
    column: usize,
    dt: f64,
    out: &Path,
    format: Option<DatasetFormat>,
) -> CliResult {
    spec.validate().map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let (v, d) = load_pair(input, diff, sg, column, dt)?;
    let ds = build_windows(&v, &d, &spec)?;
    let format = format.unwrap_or(if out.extension().is_some_and(|e| e == "csv") {
        DatasetFormat::Csv
    } else {
        DatasetFormat::Json
    });
    let body = match format {
        DatasetFormat::Json => {
            let mut s = serde_json::to_string(&ds).map_err(|e| fail(EXIT_NUMERIC, e.to_string()))?;
            s.push('\n');
            s
        }
        DatasetFormat::Csv => dataset_csv(&ds),
    };
    std::fs::write(out, body).map_err(|e| Failure::from(Error::Io {
        path: out.to_path_buf(),
        source: e,
    }))?;
    println!("wrote {} windows to {}", ds.len(), out.display());
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| match e {
        Error::Io { .. } | Error::Config(_) => fail(EXIT_CONFIG, e.to_string()),
        other => Failure::from(other),
    })?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn parse_formats(list: &[String]) -> Result<Vec<ReportFormat>, Failure> {
    list.iter()
        .map(|s| s.trim().parse::<ReportFormat>().map_err(Failure::from))
        .collect()
}

fn print_summary(report: &RunReport) {
    println!("completed {} of {} runs", report.completed, report.n_runs);
    for f in &report.failed {
        println!("  run {} (seed {}) failed: {}", f.run, f.seed, f.cause);
    }
    if let Some(a) = &report.aggregate {
        for (key, m) in [("orig.train", &a.orig.train), ("orig.test", &a.orig.test), ("diff.test", &a.diff.test)] {
            println!("  {key:<12} mean {:.5}  95% CI [{:.5}, {:.5}]", m.mean, m.ci_lo, m.ci_hi);
        }
        if let (Some(o), Some(d)) = (a.orig.test_steps.first(), a.diff.test_steps.first()) {
            println!("  step 1       orig {:.5}  diff {:.5}", o.mean, d.mean);
        }
    }
}

fn train_cmd(config: &Path, model_out: Option<&Path>) -> CliResult {
    let cfg = load_config(config)?;
    let data = prepare(&cfg)?;
    let (params, result) = fit_run(&cfg, &data, 0)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Failure::from(Error::Io {
        path: cfg.output_dir.clone(),
        source: e,
    }))?;
    let model_path = model_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join("model.json"));
    let echo = serde_json::json!({
        "experiment": cfg,
        "train": cfg.train_config(0),
        "value_scale": data.value_scale,
        "diff_scale": data.diff_scale,
    });
    save_model(&model_path, &params, &echo)?;
    let report = RunReport {
        config: ExperimentConfig { n_runs: 1, ..cfg.clone() },
        n_runs: 1,
        completed: 1,
        failed: vec![],
        aggregate: Some(AggregateReport::over(std::slice::from_ref(&result), cfg.ci)?),
        runs: vec![result],
    };
    emit_reports(&report, &ReportFormat::ALL, &cfg.output_dir)?;
    print_summary(&report);
    println!("model written to {}", model_path.display());
    Ok(())
}

fn finish(report: &RunReport, reference: Option<&ReferenceTable>, formats: &[ReportFormat], dir: &Path) -> CliResult {
    let written = emit_reports(report, formats, dir)?;
    print_summary(report);
    for p in written {
        println!("  wrote {}", p.display());
    }
    if report.completed == 0 {
        return Err(fail(EXIT_NUMERIC, "every run failed"));
    }
    if let Some(table) = reference {
        let cmp = compare_to_reference(report, table)?;
        print!("{cmp}");
        if !cmp.passed() {
            return Err(fail(EXIT_REFERENCE_FAIL, format!("reference comparison against {} failed", cmp.table)));
        }
    }
    Ok(())
}

fn benchmark(config: &Path, reference: Option<&Path>, formats: &[String], sweep: Option<&[f64]>) -> CliResult {
    let cfg = load_config(config)?;
    let formats = parse_formats(formats)?;
    let table = reference.map(ReferenceTable::from_path).transpose()?;
    match sweep {
        None => {
            let report = run_experiment(&cfg)?;
            finish(&report, table.as_ref(), &formats, &cfg.output_dir)
        }
        Some(lambdas) => {
            let mut worst: CliResult = Ok(());
            for (l, report) in lambda_sweep(&cfg, lambdas)? {
                println!("lambda = {l}");
                let dir = cfg.output_dir.join(format!("lambda_{l}"));
                if let Err(f) = finish(&report, table.as_ref(), &formats, &dir) {
                    eprintln!("  {}", f.message);
                    if worst.is_ok() {
                        worst = Err(f);
                    }
                }
            }
            worst
        }
    }
}

fn gradcheck_cmd(seed: u64, draws: usize, tolerance: f64) -> CliResult {
    let cfg = GradcheckConfig {
        seed,
        draws,
        ..Default::default()
    };
    let r = gradcheck(&cfg)?;
    println!(
        "checked {} gradients over {} draws: max relative error {:.3e} ({}[{}], draw {})",
        r.parameters_checked, r.draws, r.max_rel_error, r.worst_tensor, r.worst_index, r.worst_draw
    );
    if r.max_rel_error < tolerance {
        println!("PASS (tolerance {tolerance:e})");
        Ok(())
    } else {
        Err(fail(EXIT_NUMERIC, format!("gradient check failed (tolerance {tolerance:e})")))
    }
}

fn fnn_cmd(input: &Path, cfg: FnnConfig, column: usize) -> CliResult {
    let opts = CsvOptions {
        column,
        ..Default::default()
    };
    let series = read_series_csv(input, &opts)?;
    let r = false_nearest_neighbors(&series, &cfg)?;
    for (d, f) in r.fractions.iter().enumerate() {
        println!("D = {:>2}  false neighbours {:.4}", d + 1, f);
    }
    if r.converged {
        println!("embedding dimension D = {}", r.dimension);
    } else {
        println!(
            "embedding dimension D = {} (fraction never fell below {})",
            r.dimension, cfg.threshold
        );
    }
    Ok(())
}
