//! `sqc`: scenario CLI. One subcommand per protocol scenario; reports as
//! JSON on stdout, traces as JSON-lines via --trace-out.
//!
//! Exit codes: 0 success, 2 config error, 3 invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use semiquantum::scenario::{
    mint_demo_lambda4, run_scenario, ScenarioConfig, ScenarioError, ScenarioKind,
};

#[derive(Parser)]
#[command(name = "sqc", version, about = "semi-quantum currency scenario runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Security parameter (qubits per unit, bits per id); even, 2..=16
    #[arg(long, global = true)]
    lambda: Option<usize>,
    /// Scenario seed; reports and traces are pure functions of (config, seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of independent trials
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write the scenario trace (JSON-lines) to this file
    #[arg(long, global = true)]
    trace_out: Option<PathBuf>,
    /// Flat JSON config file; explicit flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Mint tokens through the delegated path and verify every unit
    Mint,
    /// Repeated non-destructive verification of honest tokens
    Verify,
    /// Honest transfer over a chosen channel
    Transfer {
        #[arg(long, value_enum)]
        channel: ChannelArg,
    },
    /// Adversarial scenario; success means the attack was blocked
    Attack {
        #[arg(long = "type", value_enum)]
        attack_type: AttackArg,
    },
    /// Print the 4-qubit zero-shift state table and the two signing cosets
    DemoEq1,
    /// Delegated-mint collision statistics on one fixed request
    Lightning,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    F2f,
    Remote,
    Onchain,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    DoubleSpend,
    Replay,
    Forge,
}

fn scenario_kind(cmd: &Cmd) -> Option<ScenarioKind> {
    match cmd {
        Cmd::Mint => Some(ScenarioKind::Mint),
        Cmd::Verify => Some(ScenarioKind::Verify),
        Cmd::Transfer { channel } => Some(match channel {
            ChannelArg::F2f => ScenarioKind::FaceToFace,
            ChannelArg::Remote => ScenarioKind::Remote,
            ChannelArg::Onchain => ScenarioKind::Onchain,
        }),
        Cmd::Attack { attack_type } => Some(match attack_type {
            AttackArg::DoubleSpend => ScenarioKind::DoubleSpendAttack,
            AttackArg::Replay => ScenarioKind::ReplayAttack,
            AttackArg::Forge => ScenarioKind::ForgeAttack,
        }),
        Cmd::DemoEq1 => None,
        Cmd::Lightning => Some(ScenarioKind::Lightning),
    }
}

fn build_config(cli: &Cli, kind: ScenarioKind) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
            let mut cfg = ScenarioConfig::from_json(&text)?;
            cfg.scenario = kind;
            cfg
        }
        None => ScenarioConfig::new(kind),
    };
    if let Some(lambda) = cli.lambda {
        cfg.lambda = lambda;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), ScenarioError> {
    if let Cmd::DemoEq1 = cli.cmd {
        let rep = mint_demo_lambda4(cli.seed.unwrap_or(0))?;
        print!("{}", rep.table);
        println!("{}", serde_json::to_string_pretty(&rep).unwrap());
        if !(rep.contains_zero && rep.xor_closed && rep.cosets_disjoint) {
            return Err(ScenarioError::Invariant(
                "demo state structure check failed".into(),
            ));
        }
        return Ok(());
    }
    let kind = scenario_kind(&cli.cmd).expect("all non-demo subcommands map to a scenario");
    let cfg = build_config(cli, kind)?;
    let (report, trace) = run_scenario(&cfg)?;
    if let Some(path) = &cli.trace_out {
        let mut text = trace.join("\n");
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))?;
    }
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if !report.conservation_ok {
        return Err(ScenarioError::Invariant("conservation check failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ ScenarioError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ ScenarioError::Invariant(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
