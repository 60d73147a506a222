//! `arbor`: sampling, classification and Monte Carlo experiments on
//! automorphisms of regular trees.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 an experiment's pass
//! condition failed, 1 anything else (I/O).

mod commands;
mod config;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::Settings;
use output::Run;

#[derive(Parser, Debug)]
#[command(name = "arbor", version, about = "Experiments on automorphisms of regular trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Portraits of seeded Haar elements, truncated at --depth.
    Sample,
    /// Classify an element given by --portrait, --word with --assignment, or
    /// seeded Haar sampling over --targets.
    Classify,
    /// Fixed trees of elliptic elements with offspring counts.
    Fixtree,
    /// Cyclic reduction, evaluation, traces, radius and special indices of --word.
    Word,
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Experiment {
    /// Depth projections of Haar samples against the uniform law.
    HaarGof,
    /// Offspring law and survival of fixed trees.
    Gw,
    /// Relations and deep fixed trees among short words in Haar generators.
    AlmostFree,
    /// Properties of the eta action on conditioned assignments.
    EtaVerify,
    /// Joint law of local permutations of w(a) along a conditioned trace.
    CocycleUniformity,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Classify => "classify",
            Command::Fixtree => "fixtree",
            Command::Word => "word",
            Command::Experiment(e) => match e {
                Experiment::HaarGof => "experiment haar-gof",
                Experiment::Gw => "experiment gw",
                Experiment::AlmostFree => "experiment almost-free",
                Experiment::EtaVerify => "experiment eta-verify",
                Experiment::CocycleUniformity => "experiment cocycle-uniformity",
            },
        }
    }
}

fn run(command: Command, s: &Settings) -> anyhow::Result<commands::Produced> {
    match command {
        Command::Sample => commands::sample(s),
        Command::Classify => commands::classify_cmd(s),
        Command::Fixtree => commands::fixtree(s),
        Command::Word => commands::word(s),
        Command::Experiment(e) => match e {
            Experiment::HaarGof => commands::haar_gof_cmd(s),
            Experiment::Gw => commands::gw_cmd(s),
            Experiment::AlmostFree => commands::almost_free_cmd(s),
            Experiment::EtaVerify => commands::eta_verify_cmd(s),
            Experiment::CocycleUniformity => commands::cocycle_uniformity_cmd(s),
        },
    }
}

/// Settings echoed into the summary, minus those that must not affect the
/// output bytes.
fn echoed(s: &Settings) -> Value {
    let mut v = serde_json::to_value(s).expect("serializable");
    if let Value::Object(m) = &mut v {
        m.remove("threads");
        m.remove("out");
        m.retain(|_, x| !x.is_null());
    }
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match Settings::resolve(&cli.settings) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("invalid configuration: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = settings.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let produced = match run(cli.command, &settings) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("invalid configuration: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = Run {
        command: cli.command.name().to_string(),
        settings: echoed(&settings),
        summary: produced.summary,
        records: produced.records,
    };
    if let Some(dir) = &settings.out {
        if let Err(e) = result.write(dir) {
            eprintln!("writing results: {e:#}");
            return ExitCode::from(1);
        }
    }
    let doc = serde_json::to_string_pretty(&result.summary_document()).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{doc}");
    if produced.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: pass condition failed", result.command);
        ExitCode::from(3)
    }
}
