mod ablate;
mod adapt;
mod baseline;
mod eval;
mod label;
mod replay;
mod simulate;
mod warmup;

use std::path::Path;

use talc_core::{GoldLabels, LabelSpace, LabelingMatrix};

use crate::args::Command;
use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;

/// Runs one subcommand. `args` are the effective arguments after the
/// subcommand name, recorded verbatim in the manifest.
pub fn dispatch(command: Command, args: &[String]) -> CliResult {
    let rec = Recorder::new(command.name(), args);
    match command {
        Command::Adapt(a) => adapt::run(a, rec),
        Command::Simulate(a) => simulate::run(a, rec),
        Command::Ablate(a) => ablate::run(a, rec),
        Command::Eval(a) => eval::run(a, rec),
        Command::Baseline(a) => baseline::run(a, rec),
        Command::Warmup(a) => warmup::run(a, rec),
        Command::Label(a) => label::run(a, rec),
        Command::Replay(a) => replay::run(a),
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn read_classes(rec: &mut Recorder, path: &Path) -> CliResult<LabelSpace> {
    let text = rec.read(path)?;
    parse_json(&text, path)
}

fn read_matrix(rec: &mut Recorder, path: &Path, space: &LabelSpace) -> CliResult<LabelingMatrix> {
    let text = rec.read(path)?;
    LabelingMatrix::parse_csv(&text, space)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn read_gold(rec: &mut Recorder, path: &Path, space: &LabelSpace) -> CliResult<GoldLabels> {
    let text = rec.read(path)?;
    GoldLabels::parse_csv(&text, space)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}
