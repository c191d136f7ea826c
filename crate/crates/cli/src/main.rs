use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaac::config::parse_config;
use gaac::dataset;
use gaac::mlp::Mlp;
use gaac::pfm::PfmModel;
use gaac::pipeline::{self, ExperimentConfig, Mode};
use gaac::rundir::{self, write_new};
use gaac::GaacError;

#[derive(Parser)]
#[command(name = "gaac", version, about = "GAAC experiments on Mountain Car Continuous")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Flat `key = value` config file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the training mode (ac, ac_ga, ac_beo, gaac).
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Stage 1: actor-critic rounds and best-episode selection.
    Collect {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits the PFM on a collected run directory.
    TrainPfm {
        #[arg(long)]
        run: PathBuf,
    },
    /// Stage 2: GA over the eta-subset, writing the optimized dataset.
    Optimize {
        #[arg(long)]
        run: PathBuf,
    },
    /// Stage 3: regresses the final policy on the optimized dataset.
    TrainPolicy {
        #[arg(long)]
        run: PathBuf,
    },
    /// Evaluation episodes of the trained policy.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
    },
    /// All stages of one mode.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// All four modes with shared seeds, one subdirectory each.
    Ablation {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// GAAC for several eta values over repeated stage-1 datasets.
    EtaSweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated fractions or percentages.
        #[arg(long, default_value = "0,0.15,0.25,0.5")]
        etas: String,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
    /// CSV bundles for plotting from a run, ablation or eta-sweep directory.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl From<GaacError> for Failure {
    fn from(e: GaacError) -> Self {
        match e {
            GaacError::Config { .. } | GaacError::Parse { .. } => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) if !p.is_file() => return Err(Failure::Config(format!("config file {} not found", p.display()))),
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(m) = &args.mode {
        cfg.mode = Mode::from_tag(m).ok_or_else(|| Failure::Usage(format!("unknown mode `{m}`")))?;
    }
    eprintln!("seed: {}", cfg.seed);
    Ok(cfg)
}

fn load_run_config(run: &Path) -> CliResult<ExperimentConfig> {
    let cfg = rundir::load_config(run)?;
    eprintln!("seed: {}", cfg.seed);
    Ok(cfg)
}

fn parse_etas(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let v = match t.strip_suffix('%') {
                Some(p) => p.trim().parse::<f64>().map(|x| x / 100.0),
                None => t.parse::<f64>(),
            };
            match v {
                Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
                _ => Err(Failure::Usage(format!("bad eta `{t}`"))),
            }
        })
        .collect()
}

fn require_fresh(dir: &Path) -> CliResult<()> {
    if dir.exists() && dir.read_dir().map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(Failure::Runtime(format!(
            "{} is not empty; run directories are never overwritten",
            dir.display()
        )));
    }
    Ok(())
}

fn print_summary(label: &str, eval: &pipeline::EvaluationReport) {
    println!(
        "{label}: mean {:.3} std {:.3} failures {}/{}",
        eval.mean,
        eval.std,
        eval.failures,
        eval.rewards.len()
    );
}

fn training_samples(run: &Path, cfg: &ExperimentConfig) -> CliResult<Vec<dataset::Sample>> {
    let name = if cfg.mode.single_round() { rundir::D_O } else { rundir::D1 };
    Ok(dataset::samples_from_csv(&rundir::read_artifact(run, name)?)?)
}

fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Collect { cfg, out } => {
            let cfg = load(&cfg)?;
            require_fresh(&out)?;
            let s1 = pipeline::collect_for(&cfg)?;
            write_new(&out, rundir::CONFIG, &gaac::config::config_to_text(&cfg))?;
            write_new(&out, rundir::D_O, &dataset::samples_to_csv(&s1.d_o))?;
            write_new(&out, rundir::D1, &dataset::samples_to_csv(s1.d1()))?;
            write_new(&out, rundir::EPISODES, &rundir::episodes_csv(&s1.rounds))?;
            println!(
                "collected {} rounds ({} drawn), {} successful best episodes, |D_1| = {}",
                s1.rounds.len(),
                s1.rounds_drawn,
                s1.successes(),
                s1.d1().len()
            );
        }
        Command::TrainPfm { run } => {
            let cfg = load_run_config(&run)?;
            let data = training_samples(&run, &cfg)?;
            let pfm = pipeline::fit_pfm(&data, &cfg)?;
            write_new(&run, rundir::PFM, &pfm.to_text())?;
            println!("pfm trained, final mse {:.6}", pfm.final_mse);
        }
        Command::Optimize { run } => {
            let cfg = load_run_config(&run)?;
            let data = training_samples(&run, &cfg)?;
            let w = if pipeline::runs_stage2(&cfg) {
                let pfm = PfmModel::from_text(&rundir::read_artifact(&run, rundir::PFM)?)?;
                let s2 = pipeline::stage2_with_pfm(&data, pfm, cfg.eta, &cfg)?;
                println!(
                    "optimized {} tuples, {} improved ({:.3})",
                    s2.subset.len(),
                    s2.improved(),
                    s2.improved_fraction()
                );
                s2.w2
            } else {
                println!("mode {} with eta {} skips the GA", cfg.mode.tag(), cfg.eta);
                pipeline::unoptimized_pairs(&data)
            };
            write_new(&run, rundir::W, &dataset::pairs_to_csv(&w))?;
        }
        Command::TrainPolicy { run } => {
            let cfg = load_run_config(&run)?;
            let w = dataset::pairs_from_csv(&rundir::read_artifact(&run, rundir::W)?)?;
            let (policy, loss) = pipeline::stage3_train_policy(&w, &cfg)?;
            write_new(&run, rundir::POLICY, &policy.net.to_text())?;
            println!(
                "policy trained, loss {:.6} -> {:.6}",
                loss.first().copied().unwrap_or(f64::NAN),
                loss.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Evaluate { run } => {
            let cfg = load_run_config(&run)?;
            let net = Mlp::from_text(&rundir::read_artifact(&run, rundir::POLICY)?)?;
            let policy = gaac::actor_critic::GaussianPolicy::new(net, cfg.round.nets.scaler())?;
            let train = rundir::train_rewards_from_csv(&rundir::read_artifact(&run, rundir::EPISODES)?)?;
            let (eval, best) = pipeline::evaluate(&policy, cfg.eval_episodes, cfg.round.max_steps, cfg.seed)?;
            write_new(&run, rundir::TRAJECTORY, &best.to_csv())?;
            write_new(&run, rundir::REWARDS, &rundir::rewards_csv(&train, &eval.rewards))?;
            let mut fields = vec![("mode", cfg.mode.tag().to_string()), ("seed", cfg.seed.to_string())];
            fields.extend(rundir::eval_fields(&eval));
            write_new(&run, rundir::REPORT, &rundir::report_text(&fields))?;
            print_summary(cfg.mode.tag(), &eval);
        }
        Command::Run { cfg, out } => {
            let cfg = load(&cfg)?;
            require_fresh(&out)?;
            let run = pipeline::run_mode(&cfg)?;
            rundir::write_run(&out, &run)?;
            print_summary(cfg.mode.tag(), &run.eval);
        }
        Command::Ablation { cfg, out } => {
            let cfg = load(&cfg)?;
            require_fresh(&out)?;
            for run in pipeline::ablation(&cfg)? {
                rundir::write_run(&out.join(run.config.mode.tag()), &run)?;
                print_summary(run.config.mode.tag(), &run.eval);
            }
        }
        Command::EtaSweep { cfg, out, etas, repeats } => {
            let cfg = load(&cfg)?;
            let etas = parse_etas(&etas)?;
            if repeats == 0 {
                return Err(Failure::Usage("repeats must be at least 1".into()));
            }
            require_fresh(&out)?;
            let results = pipeline::eta_sweep(&cfg, &etas, repeats)?;
            write_new(&out, rundir::CONFIG, &gaac::config::config_to_text(&cfg))?;
            write_new(&out, rundir::ETA_RAW, &rundir::eta_raw_csv(&results))?;
            let summary = rundir::eta_summary(&results);
            write_new(&out, "eta_summary.csv", &summary)?;
            print!("{summary}");
        }
        Command::PlotData { run, out } => {
            let written = rundir::emit_plot_data(&run, &out)?;
            for p in [written.rewards, written.trajectory, written.eta].into_iter().flatten() {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GAAC_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("GAAC_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|_| execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
