//! Command-line front end: experiment orchestration and report emission.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use momentlab::acceptance;
use momentlab::config::{ExperimentKindConfig, FormatConfig, RunConfig};
use momentlab::harness::{
    rate_vs_kappa_experiment, run_trial, seed_stream, Distribution, ExperimentConfig,
    ExperimentKind, GridSpec, STREAM_W_STAR,
};
use momentlab::optimizers::{HyperParams, Method};
use momentlab::problems::ProblemInstance;
use momentlab::report;
use momentlab::spectral::{eval_d_at_one, hb_stability_verdict, HbCoordParams, StabilityVerdict};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "momentlab",
    version,
    about = "Streaming least-squares optimizer laboratory: trials, grid search and exact spectral rate analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write its report bundle.
    Run(RunArgs),
    /// Classify heavy-ball stability for one parameter point (or a sweep).
    Spectral(SpectralArgs),
    /// Render log-log rate plots from a results directory.
    Plot(PlotArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output format override: csv or json (json also writes the csv tables).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    #[arg(long)]
    sigma2: f64,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Sweep an n x n (delta, momentum) grid instead of the single point.
    #[arg(long)]
    sweep_grid: Option<usize>,
    /// Output directory for the verdict table.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory containing rates_*.csv files.
    results_dir: PathBuf,
    /// Output directory for the SVG files (defaults to the results dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criterion ids to run (default: all).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Spectral(args) => cmd_spectral(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn build_thread_pool(threads: usize) -> Option<rayon::ThreadPool> {
    if threads == 0 {
        return None;
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let config_text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("cannot read {}: {e}", args.config.display())),
    };
    let mut cfg = match RunConfig::from_str(&config_text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Some(seed) = args.seed {
        cfg.experiment.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.experiment.output_dir = out.display().to_string();
    }
    match args.format.as_deref() {
        Some("csv") => cfg.experiment.format = FormatConfig::Csv,
        Some("json") => cfg.experiment.format = FormatConfig::Json,
        Some(other) => return fail(EXIT_CONFIG, format!("unknown format '{other}'")),
        None => {}
    }
    if args.threads != 0 {
        cfg.experiment.threads = args.threads;
    }
    let pool = build_thread_pool(cfg.experiment.threads);
    let run = || run_experiment(&cfg, &config_text);
    let outcome = match &pool {
        Some(pool) => pool.install(run),
        None => run(),
    };
    match outcome {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_NUMERICAL, e),
    }
}

fn run_experiment(cfg: &RunConfig, config_text: &str) -> Result<Vec<PathBuf>, String> {
    let out_dir = PathBuf::from(&cfg.experiment.output_dir);
    let json = cfg.experiment.format == FormatConfig::Json;
    let mut written = Vec::new();
    match cfg.experiment.kind {
        ExperimentKindConfig::Empirical | ExperimentKindConfig::Spectral => {
            let sweep = cfg.sweep.as_ref().expect("validated");
            let kind = match cfg.experiment.kind {
                ExperimentKindConfig::Empirical => ExperimentKind::Empirical,
                _ => ExperimentKind::Spectral,
            };
            for dist in &sweep.distributions {
                let dist: Distribution = (*dist).into();
                let mut exp = ExperimentConfig::new(
                    dist,
                    sweep.condition_numbers.clone(),
                    cfg.experiment.master_seed,
                );
                exp.methods = sweep.methods.iter().map(|m| Method::from(*m)).collect();
                exp.trials = sweep.trials;
                exp.iterations_factor = sweep.iterations_factor;
                exp.grid = GridSpec::momentum_grid(sweep.grid_points);
                exp.spectral_grid_points = sweep.spectral_grid_points;
                exp.moment_method = cfg.moment_method();
                exp.record_points = sweep.record_points;
                exp.aggregate = cfg.aggregate();
                let report_data =
                    rate_vs_kappa_experiment(kind, &exp).map_err(|e| e.to_string())?;
                for s in &report_data.slopes {
                    println!(
                        "{} {}: gamma = {:.4} (residual {:.4})",
                        dist.label(),
                        s.method.label(),
                        s.gamma,
                        s.residual
                    );
                }
                written.extend(
                    report::write_experiment_report(&out_dir, &report_data, json)
                        .map_err(|e| e.to_string())?,
                );
            }
        }
        ExperimentKindConfig::Trial => {
            let trial = cfg.trial.as_ref().expect("validated");
            let instance = build_trial_instance(cfg.experiment.master_seed, &trial.instance)
                .map_err(|e| e.to_string())?;
            let method: Method = trial.method.into();
            let hp = trial_hyperparams(trial, method);
            hp.validate(method).map_err(|e| e.to_string())?;
            let rng = seed_stream(cfg.experiment.master_seed, 0, 0);
            let result =
                run_trial(&instance, method, &hp, trial.iterations, rng, trial.record_every);
            println!(
                "trial: method {} converged {} diverged {} final loss {:.6e} rate {:.6e}",
                method.label(),
                result.converged,
                result.diverged,
                result.final_loss,
                result.rate
            );
            let path = out_dir.join("trial.csv");
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            std::fs::write(&path, report::trial_csv(&result.loss_trace))
                .map_err(|e| e.to_string())?;
            written.push(path);
            if json {
                let path = out_dir.join("trial.json");
                std::fs::write(&path, serde_json::to_string_pretty(&result).expect("serializable"))
                    .map_err(|e| e.to_string())?;
                written.push(path);
            }
        }
        ExperimentKindConfig::StabilitySweep => {
            let p = cfg.stability.as_ref().expect("validated");
            let mut summary =
                String::from("kappa,min_worst_direction_lambda,bound,grid_points,violations\n");
            for &kappa in &p.kappas {
                let sigma2 = (p.kurtosis / kappa).sqrt();
                let instance =
                    ProblemInstance::scaled_discrete(1.0, sigma2, p.kurtosis, vec![0.6, -0.8])
                        .map_err(|e| e.to_string())?;
                let bound = 1.0 - 500.0 / kappa;
                let grid = p.grid_points;
                let mut rows = Vec::with_capacity(grid * grid);
                let delta_max = 2.0 / (sigma2 * sigma2);
                let mut min_lambda = f64::INFINITY;
                let mut violations = 0usize;
                for i in 1..=grid {
                    let delta = i as f64 / grid as f64 * delta_max;
                    for j in 0..grid {
                        let alpha = j as f64 / (grid - 1) as f64;
                        let v = hb_stability_verdict(alpha, delta, &instance)
                            .map_err(|e| e.to_string())?;
                        min_lambda = min_lambda.min(v.lambda_max);
                        violations += usize::from(v.lambda_max < bound);
                        rows.push((alpha, delta, v));
                    }
                }
                let path = out_dir.join(format!("verdicts_kappa_{kappa}.csv"));
                std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
                std::fs::write(&path, report::verdicts_csv(&rows)).map_err(|e| e.to_string())?;
                written.push(path);
                summary.push_str(&format!(
                    "{kappa},{min_lambda},{bound},{},{violations}\n",
                    grid * grid
                ));
                println!(
                    "kappa {kappa}: min worst-direction lambda {min_lambda:.9} vs bound {bound:.9} ({violations} violations)"
                );
            }
            let path = out_dir.join("stability_summary.csv");
            std::fs::write(&path, summary).map_err(|e| e.to_string())?;
            written.push(path);
        }
    }
    report::write_provenance(&out_dir, config_text, cfg.experiment.master_seed, "momentlab run")
        .map_err(|e| e.to_string())?;
    written.push(out_dir.join("provenance.txt"));
    Ok(written)
}

fn build_trial_instance(
    master_seed: u64,
    instance: &momentlab::config::InstanceConfig,
) -> Result<ProblemInstance, String> {
    use momentlab::config::InstanceConfig;
    let mut w_star_rng = seed_stream(master_seed, 0, STREAM_W_STAR);
    let w_star = ProblemInstance::random_w_star(instance.dimension(), &mut w_star_rng);
    let built = match instance {
        InstanceConfig::Discrete { condition_number } => {
            Distribution::Discrete.instance(*condition_number, w_star).map_err(|e| e.to_string())?
        }
        InstanceConfig::Gaussian { condition_number } => {
            Distribution::Gaussian.instance(*condition_number, w_star).map_err(|e| e.to_string())?
        }
        InstanceConfig::Scaled { sigma1, sigma2, kurtosis } => {
            ProblemInstance::scaled_discrete(*sigma1, *sigma2, *kurtosis, w_star)
                .map_err(|e| e.to_string())?
        }
        InstanceConfig::Custom { sigma, kurtosis } => {
            ProblemInstance::custom_diagonal(sigma.clone(), *kurtosis, w_star)
                .map_err(|e| e.to_string())?
        }
    };
    Ok(built)
}

fn trial_hyperparams(trial: &momentlab::config::TrialSection, method: Method) -> HyperParams {
    match method {
        Method::Asgd | Method::AsgdReference => HyperParams::asgd(
            trial.learning_rate,
            trial.long_step.unwrap_or(1.0),
            trial.advantage.unwrap_or(1.0),
        ),
        _ => HyperParams::momentum(trial.learning_rate, trial.momentum),
    }
}

fn cmd_spectral(args: SpectralArgs) -> ExitCode {
    if !(args.sigma1 > args.sigma2 && args.sigma2 > 0.0) || !(args.c >= 2.0) {
        return fail(EXIT_CONFIG, "require sigma1 > sigma2 > 0 and c >= 2");
    }
    let instance =
        match ProblemInstance::scaled_discrete(args.sigma1, args.sigma2, args.c, vec![0.6, -0.8])
        {
            Ok(i) => i,
            Err(e) => return fail(EXIT_CONFIG, e),
        };
    let kappa = instance.kappa();
    let bound = 1.0 - 500.0 / kappa;
    println!("instance: sigma1 {} sigma2 {} c {} kappa {kappa}", args.sigma1, args.sigma2, args.c);
    let mut rows: Vec<(f64, f64, StabilityVerdict)> = Vec::new();
    match args.sweep_grid {
        None => {
            if !(args.delta > 0.0) || !(0.0..=1.0).contains(&args.alpha) {
                return fail(EXIT_CONFIG, "require delta > 0 and momentum in [0, 1]");
            }
            let v = match hb_stability_verdict(args.alpha, args.delta, &instance) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_NUMERICAL, e),
            };
            let x = args.delta * args.sigma1 * args.sigma1;
            let d1 = match HbCoordParams::new(args.alpha, x, args.c) {
                Ok(p) => eval_d_at_one(&p),
                Err(e) => return fail(EXIT_NUMERICAL, e),
            };
            println!("classification: {}", v.classification.label());
            println!("lambda_max top direction:    {:.12}", v.lambda_max_top);
            println!("lambda_max bottom direction: {:.12}", v.lambda_max_bottom);
            println!("reference bound 1 - 500/kappa = {bound:.12}");
            println!(
                "D(1) at the top direction = {d1:.6e} ({})",
                if d1 <= 0.0 { "non-positive: an eigenvalue is >= 1" } else { "positive" }
            );
            rows.push((args.alpha, args.delta, v));
        }
        Some(grid) => {
            if grid < 2 {
                return fail(EXIT_CONFIG, "sweep grid needs at least 2 points per axis");
            }
            let delta_max = 2.0 / (args.sigma2 * args.sigma2);
            let mut min_lambda = f64::INFINITY;
            for i in 1..=grid {
                let delta = i as f64 / grid as f64 * delta_max;
                for j in 0..grid {
                    let alpha = j as f64 / (grid - 1) as f64;
                    match hb_stability_verdict(alpha, delta, &instance) {
                        Ok(v) => {
                            min_lambda = min_lambda.min(v.lambda_max);
                            rows.push((alpha, delta, v));
                        }
                        Err(e) => return fail(EXIT_NUMERICAL, e),
                    }
                }
            }
            println!(
                "sweep over {grid}x{grid} grid: min worst-direction lambda_max = {min_lambda:.12}"
            );
            println!("reference bound 1 - 500/kappa = {bound:.12}");
            println!(
                "bound {} over the whole grid",
                if min_lambda >= bound { "holds" } else { "VIOLATED" }
            );
        }
    }
    let path = args.out.join("verdicts.csv");
    if let Err(e) = std::fs::create_dir_all(&args.out)
        .map_err(|e| e.to_string())
        .and_then(|_| std::fs::write(&path, report::verdicts_csv(&rows)).map_err(|e| e.to_string()))
    {
        return fail(EXIT_NUMERICAL, e);
    }
    println!("wrote {}", path.display());
    ExitCode::SUCCESS
}

fn cmd_plot(args: PlotArgs) -> ExitCode {
    let out = args.out.unwrap_or_else(|| args.results_dir.clone());
    match report::plot_results_dir(&args.results_dir, &out) {
        Ok(files) if files.is_empty() => {
            fail(EXIT_CONFIG, format!("no rates_*.csv files in {}", args.results_dir.display()))
        }
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_CONFIG, e),
    }
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let outcomes = acceptance::run_all(&args.criteria);
    let mut all_passed = true;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        for d in &outcome.details {
            println!("{d}");
        }
        all_passed &= outcome.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}
