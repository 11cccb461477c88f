use talc_core::TaskDescriptor;
use talc_labeler::{build_matrix, EndpointConfig, HttpCompleter, LabelMode, PromptTemplate};

use super::parse_json;
use crate::args::{LabelArgs, LabelModeArg};
use crate::error::CliResult;
use crate::manifest::Recorder;

pub fn run(a: LabelArgs, mut rec: Recorder) -> CliResult {
    let text = rec.read(&a.task)?;
    let task: TaskDescriptor = parse_json(&text, &a.task)?;
    let text = rec.read(&a.template)?;
    let template: PromptTemplate = parse_json(&text, &a.template)?;
    let text = rec.read(&a.endpoint)?;
    let mut endpoint: EndpointConfig = parse_json(&text, &a.endpoint)?;
    endpoint.offline |= a.offline;
    let mode = match a.mode {
        LabelModeArg::PerExplanation => LabelMode::PerExplanation,
        LabelModeArg::Concat => LabelMode::Concat,
    };
    rec.config(&serde_json::json!({ "mode": mode, "endpoint": endpoint }));

    let client = HttpCompleter::new(endpoint.clone())?;
    let run = build_matrix(&task, &template, &endpoint, &client, mode)?;
    rec.write(&a.out_dir.join("matrix.csv"), &run.matrix.to_csv())?;
    rec.write_json(&a.out_dir.join("labeling.json"), &run.stats)?;
    rec.finish(&a.out_dir)?;
    println!(
        "{} prompts: {} cached, {} requested, {} failed, {} unmatched",
        run.stats.prompts,
        run.stats.cache_hits,
        run.stats.requests,
        run.stats.failures.len(),
        run.stats.unmatched.len()
    );
    if !run.stats.complete {
        eprintln!("warning: labeling incomplete; failed cells were left as abstain");
    }
    Ok(())
}
