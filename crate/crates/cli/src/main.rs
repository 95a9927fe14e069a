use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sivsim_cli::acceptance::{self, bundled_scenario};
use sivsim_cli::run::default_out_dir;
use sivsim_cli::{parse_scenario, parse_scenario_str, run_scenario, CliError, Command, Scenario};

#[derive(Parser)]
#[command(name = "sivsim", version, about = "SiV cavity-QED and spin-coherence simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `output` or out/<name>-<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Worker threads for sweep points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Orbital relaxation rates against temperature.
    Relaxation(RunArgs),
    /// Thermal line ratio and fitted orbital splitting.
    Thermal(RunArgs),
    /// Cavity transmission spectrum.
    Spectrum(RunArgs),
    /// Resonant transmission dip and fitted efficiency.
    Extinction(RunArgs),
    /// Dip depth against drive strength.
    Saturation(RunArgs),
    /// Photon statistics of transmitted and scattered light.
    G2(RunArgs),
    /// Two-photon interference of two emitters.
    Hom(RunArgs),
    /// Raman line positions under detuned driving.
    Raman(RunArgs),
    /// Two emitters coupled to one waveguide.
    Superradiance(RunArgs),
    /// Spin coherence under dynamical decoupling.
    Spin(RunArgs),
    /// Runs bundled acceptance scenarios and compares the results.
    Reproduce {
        /// Every acceptance target.
        #[arg(long, conflicts_with = "target")]
        all: bool,
        /// Specific targets (repeatable).
        #[arg(long)]
        target: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Checks an artifact directory against the acceptance thresholds.
    Compare {
        dir: PathBuf,
        /// Restrict to these targets.
        #[arg(long)]
        target: Vec<String>,
    },
    /// Prints a scenario with every default made explicit.
    Normalize {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut scenario = parse_scenario(path)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    Ok(scenario)
}

fn run_one(command: Command, args: RunArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario, args.seed)?;
    let out = args.out.unwrap_or_else(|| default_out_dir(&scenario, command));
    let manifest = run_scenario(command, &scenario, &out, args.jobs)?;
    println!("{} -> {} ({} files)", command, out.display(), manifest.outputs.len() + 1);
    Ok(())
}

fn compare(dir: &Path, only: &[String]) -> Result<(), CliError> {
    let report = acceptance::compare(dir, (!only.is_empty()).then_some(only))?;
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Failed("acceptance checks failed".into()))
    }
}

fn reproduce(all: bool, names: Vec<String>, out: &Path, seed: Option<u64>, jobs: usize) -> Result<(), CliError> {
    let targets = acceptance::targets();
    let selected: Vec<_> = if all || names.is_empty() {
        targets
    } else {
        let mut picked = Vec::new();
        for n in &names {
            let t = targets
                .iter()
                .find(|t| t.name == *n)
                .ok_or_else(|| CliError::Input(format!("unknown target `{n}`")))?;
            picked.push(t.clone());
        }
        picked
    };
    for t in &selected {
        let src = bundled_scenario(&t.scenario).expect("acceptance targets name bundled scenarios");
        let mut scenario = parse_scenario_str(src, Some(Path::new(&format!("{}.toml", t.scenario))))?;
        if let Some(s) = seed {
            scenario.seed = s;
        }
        let dir = out.join(&t.name);
        let start = std::time::Instant::now();
        run_scenario(t.command, &scenario, &dir, jobs)?;
        eprintln!("ran {} in {:.1} s", t.name, start.elapsed().as_secs_f64());
    }
    let names: Vec<String> = selected.into_iter().map(|t| t.name).collect();
    compare(out, &names)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Sub::Relaxation(a) => run_one(Command::Relaxation, a),
        Sub::Thermal(a) => run_one(Command::Thermal, a),
        Sub::Spectrum(a) => run_one(Command::Spectrum, a),
        Sub::Extinction(a) => run_one(Command::Extinction, a),
        Sub::Saturation(a) => run_one(Command::Saturation, a),
        Sub::G2(a) => run_one(Command::G2, a),
        Sub::Hom(a) => run_one(Command::Hom, a),
        Sub::Raman(a) => run_one(Command::Raman, a),
        Sub::Superradiance(a) => run_one(Command::Superradiance, a),
        Sub::Spin(a) => run_one(Command::Spin, a),
        Sub::Reproduce { all, target, out, seed, jobs } => reproduce(all, target, &out, seed, jobs),
        Sub::Compare { dir, target } => compare(&dir, &target),
        Sub::Normalize { scenario } => {
            print!("{}", parse_scenario(&scenario)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
