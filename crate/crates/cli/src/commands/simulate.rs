use serde::Serialize;
use talc_core::data::ExplanationRecord;
use talc_core::simulate::{generate, uniform_classes, TeacherProfile};
use talc_core::TaskDescriptor;

use super::parse_json;
use crate::args::SimulateArgs;
use crate::error::CliResult;
use crate::manifest::Recorder;

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    n: usize,
    k: usize,
    class_weights: &'a [f64],
    profiles: &'a [TeacherProfile],
}

pub fn run(a: SimulateArgs, mut rec: Recorder) -> CliResult {
    let text = rec.read(&a.profiles)?;
    let profiles: Vec<TeacherProfile> = parse_json(&text, &a.profiles)?;
    let class_weights = a
        .class_weights
        .clone()
        .unwrap_or_else(|| uniform_classes(a.k));
    rec.seed(a.seed);
    rec.config(&ResolvedConfig {
        n: a.n,
        k: a.k,
        class_weights: &class_weights,
        profiles: &profiles,
    });
    let task = generate(a.n, a.k, &profiles, &class_weights, a.seed)?;

    let descriptor = TaskDescriptor {
        task_name: format!("synthetic-seed{}", a.seed),
        label_space: task.label_space.clone(),
        explanations: task
            .matrix
            .explanation_ids()
            .iter()
            .zip(&task.profiles)
            .map(|(id, p)| ExplanationRecord {
                id: id.clone(),
                text: format!(
                    "synthetic teacher with accuracy {} and abstain rate {}",
                    p.accuracy, p.abstain_rate
                ),
                accuracy_metadata: Some(p.accuracy),
                perplexity_metadata: None,
            })
            .collect(),
        example_records: None,
    };
    let d = &a.out_dir;
    rec.write(&d.join("matrix.csv"), &task.matrix.to_csv())?;
    rec.write(&d.join("gold.csv"), &task.gold.to_csv())?;
    rec.write_json(&d.join("profiles.json"), &task.profiles)?;
    rec.write_json(&d.join("classes.json"), &task.label_space)?;
    rec.write_json(&d.join("task.json"), &descriptor)?;
    rec.finish(d)?;
    println!(
        "wrote {} examples x {} explanations to {}",
        task.matrix.n(),
        task.matrix.m(),
        d.display()
    );
    Ok(())
}
