use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::args::{Cli, Command, ReplayArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, RunManifest, TOOL};

/// Points every recorded output into `dir`, keeping file names.
fn redirect(manifest: &RunManifest, dir: &Path) -> (Vec<String>, Vec<PathBuf>) {
    let moved = |p: &str| {
        dir.join(Path::new(p).file_name().unwrap_or_default())
            .display()
            .to_string()
    };
    let mut args = manifest.args.clone();
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--out-dir" && i + 1 < args.len() {
            args[i + 1] = dir.display().to_string();
            i += 1;
        } else if args[i].starts_with("--out-dir=") {
            args[i] = format!("--out-dir={}", dir.display());
        } else if manifest.outputs.iter().any(|o| o.path == args[i]) {
            args[i] = moved(&args[i]);
        } else if let Some((flag, value)) = args[i].split_once('=') {
            if manifest.outputs.iter().any(|o| o.path == value) {
                args[i] = format!("{flag}={}", moved(value));
            }
        }
        i += 1;
    }
    if !args
        .iter()
        .any(|a| a == "--out-dir" || a.starts_with("--out-dir="))
    {
        args.push(format!("--out-dir={}", dir.display()));
    }
    let outputs = manifest
        .outputs
        .iter()
        .map(|o| PathBuf::from(moved(&o.path)))
        .collect();
    (args, outputs)
}

pub fn run(a: ReplayArgs) -> CliResult {
    let text = fs::read_to_string(&a.manifest)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", a.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", a.manifest.display())))?;
    if manifest.tool != TOOL {
        return Err(CliError::validation(format!("not a {TOOL} manifest")));
    }
    if manifest.version != env!("CARGO_PKG_VERSION") {
        log::warn!(
            "manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    std::env::set_current_dir(&manifest.working_dir).map_err(|e| {
        CliError::validation(format!(
            "cannot enter recorded working dir {}: {e}",
            manifest.working_dir
        ))
    })?;
    for input in &manifest.inputs {
        let bytes = fs::read(&input.path)
            .map_err(|e| CliError::validation(format!("recorded input {}: {e}", input.path)))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::validation(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }

    let (args, outputs) = match &a.out_dir {
        Some(dir) => {
            let dir = std::path::absolute(dir).map_err(|e| CliError::Internal(e.to_string()))?;
            redirect(&manifest, &dir)
        }
        None => (
            manifest.args.clone(),
            manifest
                .outputs
                .iter()
                .map(|o| PathBuf::from(&o.path))
                .collect(),
        ),
    };
    let argv = std::iter::once(TOOL.to_string())
        .chain(std::iter::once(manifest.command.clone()))
        .chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        CliError::validation(format!("recorded arguments no longer parse: {}", e.kind()))
    })?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::validation("cannot replay a replay"));
    }
    super::dispatch(cli.command, &args)?;

    let mut mismatches = Vec::new();
    for (recorded, path) in manifest.outputs.iter().zip(&outputs) {
        let actual = fs::read(path).map(|b| sha256_hex(&b)).unwrap_or_default();
        let ok = actual == recorded.sha256;
        println!(
            "{} {}",
            if ok { "match" } else { "MISMATCH" },
            path.display()
        );
        if !ok {
            mismatches.push(path.display().to_string());
        }
    }
    if mismatches.is_empty() {
        println!("replay reproduced {} output(s)", outputs.len());
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "replay differs in {} output(s): {}",
            mismatches.len(),
            mismatches.join(", ")
        )))
    }
}
