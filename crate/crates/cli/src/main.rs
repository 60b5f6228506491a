mod args;
mod commands;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::{Deserialize, Serialize};

use args::Cli;
use commands::Failure;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_NEGATIVE: u8 = 2;
pub const EXIT_EXHAUSTED: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

/// Everything needed to replay a run.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    subcommand: String,
    seed: u64,
    /// Arguments after the program name, with the seed made explicit and `--out` removed.
    argv: Vec<String>,
    resolved: serde_json::Value,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FRACINDEX_LOG", "error")).init();
    let argv: Vec<OsString> = std::env::args_os().collect();
    ExitCode::from(run(argv))
}

fn parse(argv: &[OsString]) -> Result<Cli, u8> {
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
            _ => EXIT_USAGE,
        }
    })
}

/// Arguments without `--out`/`--manifest` and with an explicit `--seed`.
fn replayable_args(argv: &[OsString], seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut has_seed = false;
    let mut iter = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = iter.next() {
        if a == "--out" || a == "--manifest" {
            iter.next();
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--manifest=") {
            continue;
        }
        has_seed |= a == "--seed" || a.starts_with("--seed=");
        out.push(a);
    }
    if !has_seed {
        out.push("--seed".into());
        out.push(seed.to_string());
    }
    out
}

fn load_manifest(path: &Path, cli: &Cli) -> Result<Vec<OsString>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read manifest {}: {e}", path.display()))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| format!("invalid manifest: {e}"))?;
    let mut argv: Vec<OsString> = vec!["fracindex".into()];
    argv.extend(m.argv.into_iter().map(OsString::from));
    if let Some(out) = &cli.common.out {
        argv.push("--out".into());
        argv.push(out.clone().into_os_string());
    }
    Ok(argv)
}

pub fn run(argv: Vec<OsString>) -> u8 {
    let mut cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let mut argv = argv;
    if let Some(path) = cli.manifest.clone() {
        argv = match load_manifest(&path, &cli) {
            Ok(a) => a,
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_USAGE;
            }
        };
        cli = match parse(&argv) {
            Ok(c) => c,
            Err(code) => return code,
        };
    }
    let Some(command) = cli.command.clone() else {
        eprintln!("error: a subcommand is required (see --help)");
        return EXIT_USAGE;
    };
    if cli.common.threads == 0 {
        eprintln!("error: --threads must be >= 1");
        return EXIT_USAGE;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads).build_global() {
        log::warn!("thread pool already initialized: {e}");
    }
    let seed = cli.common.seed.unwrap_or_else(|| {
        let s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        log::info!("no --seed given, using {s}");
        s
    });

    let result = commands::execute(&command, &cli.common, seed);
    let (artifact, code) = match result {
        Ok(ok) => (Some(ok.artifact), ok.code),
        Err(Failure::Domain(e, Some(artifact))) => {
            eprintln!("{e}");
            let code = commands::error_code(&e);
            (Some(artifact), code)
        }
        Err(f) => {
            eprintln!("error: {f}");
            return f.code();
        }
    };

    let Some(artifact) = artifact else { return code };
    match &cli.common.out {
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&artifact.bytes).is_err() {
                return EXIT_INTERNAL;
            }
        }
        Some(dir) => {
            let manifest = Manifest {
                tool: "fracindex".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                subcommand: command.name().into(),
                seed,
                argv: replayable_args(&argv, seed),
                resolved: serde_json::json!({ "common": cli.common, "command": command, "seed": seed }),
            };
            let write = || -> std::io::Result<()> {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(&artifact.file_name), &artifact.bytes)?;
                let m = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
                std::fs::write(dir.join("manifest.json"), m)
            };
            if let Err(e) = write() {
                eprintln!("error: writing to {}: {e}", dir.display());
                return EXIT_INTERNAL;
            }
        }
    }
    code
}
