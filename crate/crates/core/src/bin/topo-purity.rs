use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topo_purity::circuits::classify;
use topo_purity::experiments::suite::build_oracle;
use topo_purity::experiments::{
    lattice_header, read_region_file, read_string_file, run_oracle_suite, run_theorem_suite, ExperimentConfig,
    OracleKind,
};
use topo_purity::swap_dynamics::{apply_string, evaluate, SwapCombo};
use topo_purity::topo::{evolved_topological_purity, format_power, topological_purity};
use topo_purity::{Error, Result};

#[derive(Parser)]
#[command(
    name = "topo-purity",
    version,
    about = "Topological purity of Z_d quantum doubles under random local circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Group,
    Geometric,
    Statevector,
    Constant1,
}

impl From<OracleArg> for OracleKind {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Group => OracleKind::Group,
            OracleArg::Geometric => OracleKind::Geometric,
            OracleArg::Statevector => OracleKind::Statevector,
            OracleArg::Constant1 => OracleKind::Constant1,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the oracle kind.
    #[arg(long, value_enum)]
    oracle: Option<OracleArg>,
    /// Seed for generated strings and Monte-Carlo sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Term cap for swap evolution.
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Purity of one region.
    Purity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        region: PathBuf,
    },
    /// Four-region ratio, optionally after a string.
    Toppurity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        string: Option<PathBuf>,
    },
    /// Evolve the swap operator of a region under a string.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        region: PathBuf,
        #[arg(long)]
        string: PathBuf,
    },
    /// Safety verdict of a string against the configured partition.
    CheckString {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        string: PathBuf,
    },
    /// Cross-validate the purity engines and Monte-Carlo circuits.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Theorem suite over the configured strings.
    Suite {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load(common: &Common, fallback: Option<&Path>) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, fallback) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(region)) => {
            let text = std::fs::read_to_string(region)?;
            let (l, d) = lattice_header(&text)
                .ok_or_else(|| Error::Config("no --config and the region file has no `lattice L d` header".into()))?;
            let mut cfg = ExperimentConfig::new(l, d);
            cfg.base_dir = region.parent().map(Path::to_path_buf).unwrap_or_default();
            cfg
        }
        (None, None) => return Err(Error::Config("--config is required".into())),
    };
    if let Some(o) = common.oracle {
        cfg.oracle.kind = o.into();
    }
    if let Some(s) = common.seed {
        cfg.monte_carlo.seed = s;
        if let Some(g) = cfg.strings.generate.as_mut() {
            g.seed = s;
        }
    }
    if let Some(n) = common.samples {
        cfg.monte_carlo.samples = n;
    }
    if let Some(b) = common.budget {
        cfg.budget.term_cap = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn csv_target(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.output.csv.as_ref().map(|p| cfg.resolve(p)))
}

fn emit(path: Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(&p)?;
            write(&mut f)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => write(&mut io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Purity { common, region } => {
            let cfg = load(&common, Some(&region))?;
            let lattice = cfg.build_lattice()?;
            let r = read_region_file(&lattice, &region)?;
            let oracle = build_oracle(&cfg, &lattice)?;
            let p = oracle.purity(&r)?;
            println!("{}", format_power(&p, lattice.dim()));
        }
        Command::Toppurity { common, string } => {
            let cfg = load(&common, None)?;
            let lattice = cfg.build_lattice()?;
            let partition = cfg.build_partition(&lattice)?;
            let oracle = build_oracle(&cfg, &lattice)?;
            let report = match string {
                Some(s) => {
                    let s = read_string_file(&lattice, &s)?;
                    evolved_topological_purity(&lattice, oracle.as_ref(), &partition, &s, cfg.budget.term_cap)?
                }
                None => topological_purity(&lattice, oracle.as_ref(), &partition)?,
            };
            println!("{report}");
        }
        Command::Evolve { common, region, string } => {
            let cfg = load(&common, Some(&region))?;
            let lattice = cfg.build_lattice()?;
            let r = read_region_file(&lattice, &region)?;
            let s = read_string_file(&lattice, &string)?;
            let combo = apply_string(&SwapCombo::swap(&lattice, &r)?, &s, cfg.budget.term_cap)?;
            let oracle = build_oracle(&cfg, &lattice)?;
            println!("terms = {}", combo.len());
            println!("coefficient sum = {}", combo.coefficient_sum());
            println!(
                "purity = {}",
                format_power(&evaluate(&combo, oracle.as_ref())?, lattice.dim())
            );
        }
        Command::CheckString { common, string } => {
            let cfg = load(&common, None)?;
            let lattice = cfg.build_lattice()?;
            let partition = cfg.build_partition(&lattice)?;
            let s = read_string_file(&lattice, &string)?;
            println!("{}", classify(&lattice, &s, &partition)?);
        }
        Command::OracleCompare { common, csv } => {
            let cfg = load(&common, None)?;
            let suite = run_oracle_suite(&cfg)?;
            emit(csv_target(&csv, &cfg), |w| suite.write_csv(w))?;
            let failed = suite.failures().len();
            eprintln!("{} rows, {failed} failed", suite.rows.len());
            if failed > 0 {
                return Err(Error::Assertion(format!("{failed} oracle comparisons failed")));
            }
        }
        Command::Suite { common, csv } => {
            let cfg = load(&common, None)?;
            let suite = run_theorem_suite(&cfg)?;
            emit(csv_target(&csv, &cfg), |w| suite.write_csv(w))?;
            let bad = suite.violations();
            let errors = suite.rows.iter().filter(|r| r.status != "ok").count();
            eprintln!(
                "{} strings, {} safe, {} violations, {errors} errors",
                suite.rows.len(),
                suite.rows.iter().filter(|r| r.verdict == "SAFE").count(),
                bad.len()
            );
            if !bad.is_empty() {
                return Err(Error::Assertion(format!("theorem violated on {}", bad[0].id)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
