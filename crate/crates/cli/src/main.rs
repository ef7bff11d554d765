use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ma_lab::{
    load_reports, load_solution, parse_ks, restrict, run, solution_json, solve_instance, summarize, verify, violation,
    CliError, ExperimentConfig, Overrides,
};
use ma_lab_core::estimates::{rows_csv, Stage};

#[derive(Parser)]
#[command(name = "ma-lab", version, about = "Monge-Ampere solver and interior estimate verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone)]
struct Ks(Vec<u32>);

impl std::str::FromStr for Ks {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_ks(s).map(Ks)
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Grid steps across the domain width.
    #[arg(long)]
    grid: Option<usize>,
    /// Run a single instance with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// k values: `0..2`, `0,1` or `1`.
    #[arg(long)]
    k: Option<Ks>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Instances solved at once.
    #[arg(long, env = "MA_LAB_JOBS")]
    jobs: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig::load(&self.config)?;
        c.apply(&Overrides { grid: self.grid, seed: self.seed, k: self.k.clone().map(|k| k.0), out: self.out.clone() });
        Ok(c)
    }

    fn jobs(&self) -> usize {
        self.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    Hessmean,
    Hesssupermean,
    Levelsets,
    Main,
    Reg,
}

impl Lemma {
    fn stage(self) -> Stage {
        match self {
            Lemma::Hessmean => Stage::Hessmean,
            Lemma::Hesssupermean => Stage::Hesssupermean,
            Lemma::Levelsets => Stage::Levelsets,
            Lemma::Main => Stage::Main,
            Lemma::Reg => Stage::Reg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem(s) and write solution documents.
    Solve {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Solution file for a single instance; ensembles go to `--out`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Measure section geometry of a solution.
    Atlas {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check one lemma on a solution and write its report rows.
    Verify {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(short, long)]
        input: PathBuf,
        /// Report rows as CSV, or the full report if the name ends in `.json`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare `L log^k L` integrals over the inner and outer regions.
    Estimate {
        #[arg(long, default_value = "0..2")]
        k: Ks,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve and verify every configured instance, writing manifests.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Aggregate constants across manifests or reports.
    Report {
        #[arg(short, long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write the constant spread as CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write pass/fail counts per inequality as CSV.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    std::fs::write(path, text).map_err(CliError::io(path))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("documents serialize") + "\n"
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { cfg, output } => {
            let config = cfg.load()?;
            config.validate()?;
            let instances = config.instances()?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.jobs().max(1))
                .build()
                .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            let sols: Vec<_> = pool.install(|| {
                use rayon::prelude::*;
                instances.par_iter().map(solve_instance).collect::<Result<Vec<_>, _>>()
            })?;
            match (&output, sols.as_slice()) {
                (Some(p), [sol]) => write(p, &solution_json(sol))?,
                (Some(_), _) => return Err(CliError::Validation("several instances: use --out for a directory".into())),
                (None, _) => {
                    for (inst, sol) in instances.iter().zip(&sols) {
                        write(&config.out.join(format!("{}.solution.json", inst.id)), &solution_json(sol))?;
                    }
                }
            }
            for (inst, sol) in instances.iter().zip(&sols) {
                println!("{}: {} iterations, residual {:e}", inst.id, sol.iterations, sol.residual);
            }
            Ok(())
        }
        Command::Atlas { input, output } => {
            let (id, sol) = load_solution(&input)?;
            let out = verify(&id, &sol, &[], &[0])?;
            let a = &out.atlas;
            println!("rho {:e}  theta {}  K {}  eps0 {}  cover {}", a.rho, a.theta, a.k, a.eps0, a.cover_size);
            for (t, b) in a.taus.iter().zip(&a.beta) {
                println!("beta({t}) = {b}");
            }
            match output {
                Some(p) if p.extension().is_some_and(|e| e == "csv") => write(&p, &out.report.to_csv())?,
                Some(p) => write(&p, &json(&out.atlas))?,
                None => print!("{}", out.report.to_csv()),
            }
            violation(&out.report)
        }
        Command::Verify { lemma, input, output } => {
            let (id, sol) = load_solution(&input)?;
            let stage = lemma.stage();
            let out = verify(&id, &sol, &[stage], &[0, 1, 2])?;
            let report = restrict(&out.report, stage.name());
            match output {
                Some(p) if p.extension().is_some_and(|e| e == "json") => write(&p, &json(&report))?,
                Some(p) => write(&p, &report.to_csv())?,
                None => print!("{}", report.to_csv()),
            }
            for (k, v) in &report.constants {
                eprintln!("{k} = {v}");
            }
            violation(&report)
        }
        Command::Estimate { k, input, output } => {
            let (id, sol) = load_solution(&input)?;
            let out = verify(&id, &sol, &[Stage::Main], &k.0)?;
            let main = out.main.as_ref().expect("main stage ran");
            println!("c' = {}  c'' = {}  c_bar = {}", main.key.constant, main.key.level_factor, main.cbar);
            println!("{:>3}  {:>14}  {:>14}  {:>10}  {:>10}", "k", "I_k+1(U/2)", "I_k(3U/4)", "ratio", "layer-cake");
            for r in &main.results {
                println!("{:>3}  {:>14.6e}  {:>14.6e}  {:>10.4}  {:>10.2e}", r.k, r.inner, r.outer, r.ratio, r.layer_cake.deviation);
            }
            let report = restrict(&out.report, "main");
            if let Some(p) = output {
                write(&p, &rows_csv(&report.rows))?;
            }
            violation(&report)
        }
        Command::Run { cfg } => {
            let config = cfg.load()?;
            let manifests = run(&config, cfg.jobs())?;
            let mut failed = Vec::new();
            for (path, m) in &manifests {
                let secs: f64 = m.stages.iter().map(|s| s.seconds).sum();
                println!("{}: {:.1}s, {} failing row(s) -> {}", m.instance_id, secs, m.failures.len(), path.display());
                failed.extend(m.failures.iter().map(|f| format!("{}/{f}", m.instance_id)));
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Violation { count: failed.len(), ids: failed.join(", ") })
            }
        }
        Command::Report { inputs, format, output, verdicts } => {
            let s = summarize(&load_reports(&inputs)?)?;
            match format {
                Format::Table => print!("{}", s.to_table()),
                Format::Csv => print!("{}", s.to_csv()),
            }
            if let Some(p) = output {
                write(&p, &s.to_csv())?;
            }
            if let Some(p) = verdicts {
                write(&p, &s.verdicts_csv())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ma-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
