use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use exlab::{plan, run, Overrides, RawConfig, RunError, REGISTRY};

#[derive(Parser)]
#[command(name = "exlab", version, about = "Exclusion-process experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV files and manifest.
    Run {
        /// `key = value` config, or a manifest.json from an earlier run.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiments and their parameters.
    List,
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the CSV and manifest schemas as JSON.
    Schemas,
}

fn list() {
    for e in REGISTRY {
        println!("{}\n    {}", e.name, e.about);
        for p in e.params() {
            println!("    {:<18} = {:<12} {}", p.key, p.default, p.doc);
        }
        println!();
    }
    println!("every experiment also takes: seed (default 0), threads (default 1), out_dir (default out)");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            list();
            Ok(())
        }
        Command::Schemas => {
            println!("{}", serde_json::to_string_pretty(&exlab::schema::catalogue()).expect("plain JSON"));
            Ok(())
        }
        Command::Validate { config } => RawConfig::load(&config)
            .and_then(|raw| plan(&raw, &Overrides::default()))
            .map(|(cfg, _, _)| println!("{}: ok", cfg.kind))
            .map_err(RunError::from),
        Command::Run {
            config,
            seed,
            threads,
            out,
        } => RawConfig::load(&config).map_err(RunError::from).and_then(|raw| {
            let m = run(&raw, &Overrides { seed, threads, out_dir: out })?;
            for o in &m.outputs {
                println!("{} ({} rows)", o.file, o.rows);
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
