//! Command-line front end: load a scenario config, run the solvers, and leave CSVs,
//! summaries, and a plot script behind. Every command is deterministic given config
//! plus seed — reruns must be byte-identical, which is why no artifact ever contains
//! a timestamp or wall-clock measurement.

mod artifacts;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fieldgame::contract::{build_z_table, verify_contract, ContractSpec};
use fieldgame::epidemic::{
    build_epidemic_model, run_experiment, EpidemicParams, ExperimentMode, ExperimentResult,
    ExperimentSolution,
};
use fieldgame::io::{
    read_solution_csv, write_anarchy_csv, write_realizations_csv, write_series_csv,
    write_solution_csv, write_ztable_csv,
};
use fieldgame::markov::TimeGrid;

use config::Config;

#[derive(Parser)]
#[command(
    name = "fieldgame",
    version,
    about = "Principal-intervention and anarchy solvers for the two-city epidemic game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config (TOML); built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Override [grid] n_steps.
    #[arg(long, global = true)]
    n_steps: Option<usize>,

    /// Override [sweep] damping.
    #[arg(long, global = true)]
    damping: Option<f64>,

    /// Override [sweep] tol.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Override [contract] paths.
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Override [contract] seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override [contract] kappa.
    #[arg(long, global = true)]
    kappa: Option<f64>,

    /// Override the scenario's sigma_p; for `compare`, a comma-separated list
    /// replacing [compare] planning.
    #[arg(long, global = true, value_delimiter = ',')]
    sigma_p: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the principal's intervention problem; writes solution.csv + summary.txt.
    Solve,
    /// Solve the no-intervention equilibrium; writes anarchy.csv + summary.txt.
    Anarchy,
    /// Monte-Carlo audit of the contract identities; writes verify_report.txt,
    /// realizations.csv, and contract.csv. Reuses an existing solution.csv in --out.
    Verify,
    /// Solve anarchy plus one intervention per planning weight; writes compare.csv,
    /// directional.txt, and plots.py.
    Compare,
    /// Print the complete default config as TOML.
    Defaults,
}

// ─── Failure → exit code ─────────────────────────────────────────────────────────────

enum Failure {
    /// Bad config file, bad flag combination, or unusable output directory.
    Config(String),
    /// The library refused or gave up; subdivided by variant below.
    Core(fieldgame::Error),
    /// Artifacts were written but a 3-SE identity check failed.
    Verification,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(e) => match e {
                fieldgame::Error::NoConvergence { .. } => 3,
                // Model-construction rejections are config mistakes, not runtime ones.
                fieldgame::Error::InvalidModel(_)
                | fieldgame::Error::InvalidProbability { .. }
                | fieldgame::Error::Dimension { .. } => 2,
                _ => 1,
            },
            Failure::Verification => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Verification => "verification failed (see verify_report.txt)".to_owned(),
        }
    }
}

impl From<fieldgame::Error> for Failure {
    fn from(e: fieldgame::Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };

    if let Some(n) = cli.n_steps {
        cfg.grid.n_steps = n;
    }
    if let Some(d) = cli.damping {
        cfg.sweep.damping = d;
    }
    if let Some(t) = cli.tol {
        cfg.sweep.tol = t;
    }
    if let Some(p) = cli.paths {
        cfg.contract.paths = p;
    }
    if let Some(s) = cli.seed {
        cfg.contract.seed = s;
    }
    if let Some(k) = cli.kappa {
        cfg.contract.kappa = Some(k);
    }
    if let Some(sp) = &cli.sigma_p {
        if matches!(cli.command, Command::Compare) {
            cfg.compare.planning = sp.clone();
        } else if let [v] = sp[..] {
            cfg.scenario.sigma_p = v;
        } else {
            return Err(Failure::Config(
                "--sigma-p takes a single value outside `compare`".into(),
            ));
        }
    }

    if matches!(cli.command, Command::Defaults) {
        print!("{}", Config::default().to_toml());
        return Ok(());
    }

    fs::create_dir_all(&cli.out).map_err(|e| {
        Failure::Config(format!(
            "output directory {} is not writable: {e}",
            cli.out.display()
        ))
    })?;

    match cli.command {
        Command::Solve => cmd_solve(&cfg, &cli.out),
        Command::Anarchy => cmd_anarchy(&cfg, &cli.out),
        Command::Verify => cmd_verify(&cfg, &cli.out),
        Command::Compare => cmd_compare(&cfg, &cli.out),
        Command::Defaults => unreachable!("handled above"),
    }
}

fn solve_mode(
    cfg: &Config,
    params: &EpidemicParams<f64>,
    mode: ExperimentMode,
) -> Result<ExperimentResult<f64>, Failure> {
    Ok(run_experiment(params, &cfg.sweep_params(), mode, None)?)
}

fn cmd_solve(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let params = cfg.scenario.to_params()?;
    let result = solve_mode(cfg, &params, ExperimentMode::Intervention)?;
    let sol = match &result.solution {
        ExperimentSolution::Intervention(s) => s,
        ExperimentSolution::Anarchy(_) => unreachable!(),
    };
    write_solution_csv(out.join("solution.csv"), &sol.grid, &sol.pi, &sol.y, &sol.control)?;
    fs::write(
        out.join("summary.txt"),
        artifacts::solve_summary(cfg, sol, &result.warnings),
    )
    .map_err(fieldgame::Error::from)?;
    println!("wrote solution.csv and summary.txt to {}", out.display());
    println!("objective: {}", sol.objective);
    Ok(())
}

fn cmd_anarchy(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let params = cfg.scenario.to_params()?;
    let result = solve_mode(cfg, &params, ExperimentMode::Anarchy)?;
    let sol = match &result.solution {
        ExperimentSolution::Anarchy(s) => s,
        ExperimentSolution::Intervention(_) => unreachable!(),
    };
    write_anarchy_csv(out.join("anarchy.csv"), &sol.grid, &sol.pi, &sol.value, &sol.control)?;
    fs::write(
        out.join("summary.txt"),
        artifacts::anarchy_summary(cfg, sol, &result.warnings),
    )
    .map_err(fieldgame::Error::from)?;
    println!("wrote anarchy.csv and summary.txt to {}", out.display());
    println!("average_cost: {}", sol.average_cost);
    Ok(())
}

fn cmd_verify(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let params = cfg.scenario.to_params()?;
    let model = build_epidemic_model(&params)?;
    let expected_grid =
        TimeGrid::new(0.0, params.horizon, cfg.grid.n_steps).map_err(Failure::Core)?;

    let solution_path = out.join("solution.csv");
    let (source, grid, pi, control);
    if solution_path.exists() {
        let artifact = read_solution_csv::<f64>(&solution_path)?;
        if artifact.grid != expected_grid {
            return Err(Failure::Config(format!(
                "{} covers [0, {}] in {} steps but the config asks for [0, {}] in {} steps; \
                 re-run solve, adjust the config, or point --out elsewhere",
                solution_path.display(),
                artifact.grid.t1(),
                artifact.grid.n_steps(),
                params.horizon,
                cfg.grid.n_steps,
            )));
        }
        source = "solution.csv (reused)";
        grid = artifact.grid;
        pi = artifact.pi;
        control = artifact.control;
    } else {
        let result = solve_mode(cfg, &params, ExperimentMode::Intervention)?;
        let sol = match result.solution {
            ExperimentSolution::Intervention(s) => s,
            ExperimentSolution::Anarchy(_) => unreachable!(),
        };
        source = "solved inline (no solution.csv in --out)";
        grid = sol.grid;
        pi = sol.pi;
        control = sol.control;
    }

    let kappa = cfg.contract.kappa.ok_or_else(|| {
        Failure::Config(
            "kappa is not set: the reservation level has no default; \
             set [contract] kappa in the config or pass --kappa"
                .into(),
        )
    })?;
    let contract = ContractSpec {
        kappa,
        payment_rate: cfg.contract.payment_rate,
        utility: cfg.utility.to_spec().map_err(Failure::Config)?,
    };
    let audit = verify_contract(
        &model,
        &grid,
        &pi,
        &control,
        &contract,
        cfg.contract.paths,
        cfg.contract.seed,
    )?;

    write_realizations_csv(out.join("realizations.csv"), params.horizon, &audit.realizations)?;
    write_ztable_csv(out.join("contract.csv"), &build_z_table(&model, grid, &control))?;
    fs::write(
        out.join("verify_report.txt"),
        artifacts::verify_report(cfg, kappa, source, &audit),
    )
    .map_err(fieldgame::Error::from)?;
    println!(
        "wrote verify_report.txt, realizations.csv, and contract.csv to {}",
        out.display()
    );

    if audit.agent_ok && audit.principal_ok {
        println!("verdict: PASS");
        Ok(())
    } else {
        println!("verdict: FAIL");
        Err(Failure::Verification)
    }
}

fn cmd_compare(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let params = cfg.scenario.to_params()?;
    let anarchy = solve_mode(cfg, &params, ExperimentMode::Anarchy)?;

    // One intervention per planning weight, baseline first; exact duplicates would
    // collide in the CSV header, so they are solved once.
    let mut sigmas = vec![cfg.scenario.sigma_p];
    for &v in &cfg.compare.planning {
        if !sigmas.contains(&v) {
            sigmas.push(v);
        }
    }
    let mut interventions = Vec::with_capacity(sigmas.len());
    for &sigma_p in &sigmas {
        let run = solve_mode(
            cfg,
            &EpidemicParams {
                sigma_p,
                ..params.clone()
            },
            ExperimentMode::Intervention,
        )?;
        assert_eq!(run.times, anarchy.times, "all runs share the grid");
        for w in &run.warnings {
            eprintln!("note (sigma_p={sigma_p}): {w}");
        }
        interventions.push(run);
    }

    let mut roles = vec!["anarchy".to_owned()];
    roles.extend(sigmas.iter().map(|s| format!("int_sp{s}")));

    let mut headers = vec!["t".to_owned()];
    let mut columns = vec![anarchy.times.clone()];
    for (role, run) in roles
        .iter()
        .zip(std::iter::once(&anarchy).chain(&interventions))
    {
        for (name, series) in artifacts::SERIES.iter().zip(artifacts::series_columns(run)) {
            headers.push(format!("{name}_{role}"));
            columns.push(series);
        }
    }
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let column_refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    write_series_csv(out.join("compare.csv"), &header_refs, &column_refs)?;

    let planned = (sigmas.len() >= 2).then(|| {
        (
            sigmas[0],
            sigmas[sigmas.len() - 1],
            interventions.last().unwrap(),
            params.initial_mass_a(),
        )
    });
    fs::write(
        out.join("directional.txt"),
        artifacts::directional_summary(&anarchy.times, &anarchy, &interventions[0], planned),
    )
    .map_err(fieldgame::Error::from)?;
    fs::write(out.join("plots.py"), artifacts::plot_script(&roles))
        .map_err(fieldgame::Error::from)?;
    println!(
        "wrote compare.csv, directional.txt, and plots.py to {}",
        out.display()
    );
    Ok(())
}
