use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtopos::check::{dump_sites, run_check, run_valuate};
use qtopos::scenario::Scenario;

/// Environment variable holding cap overrides such as `orbit=64,sieve_enum=1024`.
const CAPS_ENV: &str = "QTOPOS_CAPS";

#[derive(Parser)]
#[command(
    name = "qtopos",
    version,
    about = "Exact truth values of quantum propositions over finite operator sites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Print the truth values of one run's propositions.
    Valuate {
        scenario: PathBuf,
        #[arg(long)]
        run: String,
        #[arg(long)]
        json: bool,
    },
    /// Check every law over every run; exits 1 on any violation.
    Check {
        scenario: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the objects, arrows and operator table of each run's sites as JSON.
    DumpSite { scenario: PathBuf },
}

fn load(path: &Path) -> qtopos::Result<Scenario> {
    let mut s = Scenario::load(path)?;
    if let Ok(spec) = std::env::var(CAPS_ENV) {
        s.caps.apply_overrides(&spec)?;
    }
    Ok(s)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn run(cli: Cli) -> qtopos::Result<bool> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            println!(
                "{}: valid, dimension {}, {} observables, {} generators, {} runs",
                s.name,
                s.dimension,
                s.observables.len(),
                s.generators.len(),
                s.runs.len()
            );
            Ok(true)
        }
        Command::Valuate {
            scenario,
            run,
            json: as_json,
        } => {
            let s = load(&scenario)?;
            let rep = run_valuate(&s, &run)?;
            if as_json {
                println!("{}", json(&rep));
            } else {
                println!(
                    "{} / {}: state {} with atom {}",
                    rep.scenario, rep.run, rep.state, rep.true_atom
                );
                for p in &rep.propositions {
                    let arrows: Vec<String> = p
                        .sieve
                        .iter()
                        .map(|a| format!("{}->{}", a.op_name, a.cod_ray))
                        .collect();
                    let mut flags = Vec::new();
                    if p.is_top {
                        flags.push("top".to_string());
                    }
                    if p.is_bottom_annihilator {
                        flags.push("bottom".to_string());
                    }
                    if let Some(b) = p.determinate_value {
                        flags.push(format!("bit {}", u8::from(b)));
                    }
                    if let Some(x) = &p.extended {
                        let ok = x.flat_matches && x.natural_flat_matches && x.sharp_matches;
                        flags.push(format!(
                            "extended {}",
                            if ok { "agrees" } else { "DISAGREES" }
                        ));
                    }
                    println!(
                        "  {:12} {{{}}} {}",
                        p.name,
                        arrows.join(", "),
                        flags.join(", ")
                    );
                }
            }
            Ok(true)
        }
        Command::Check {
            scenario,
            json: as_json,
        } => {
            let s = load(&scenario)?;
            let rep = run_check(&s)?;
            if as_json {
                println!("{}", json(&rep));
            } else {
                print!("{}", rep.to_text());
            }
            Ok(rep.ok())
        }
        Command::DumpSite { scenario } => {
            let s = load(&scenario)?;
            println!("{}", json(&dump_sites(&s)?));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
