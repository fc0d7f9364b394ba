use std::path::PathBuf;

use serde::Serialize;
use treesum_core::metrics::{buckets_csv, evaluate, Sentence};
use treesum_core::model::{evaluate_model, load_checkpoint};
use treesum_core::{BucketEdges, EvalReport, ModelConfig};

use crate::args::EvalArgs;
use crate::io::{create_dir, read_bytes, read_text, sha256_hex, to_json_pretty, write_atomic, PreparedDir};
use crate::CliError;

#[derive(Serialize)]
struct Generated {
    id: String,
    comment: String,
}

#[derive(Serialize)]
struct EvalOutput {
    command: &'static str,
    seed: u64,
    config: ModelConfig,
    checkpoint_sha256: String,
    checkpoint_epoch: Option<usize>,
    split: String,
    gold: bool,
    bucket_edges: BucketEdges,
    report: EvalReport,
    generations: Vec<Generated>,
}

pub fn run(a: EvalArgs) -> Result<(), CliError> {
    let bytes = read_bytes(&a.checkpoint)?;
    let (mut model, epoch) =
        load_checkpoint(&bytes).map_err(|e| CliError::data(format!("{}: {e}", a.checkpoint.display())))?;
    let data = PreparedDir::open(&a.data)?;
    model.check_vocab(&data.ast_vocab, &data.comment_vocab)?;
    if let Some(b) = a.beam {
        model.config.beam = b;
        model.config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let edges = match &a.buckets {
        Some(path) => serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
        None => BucketEdges::default(),
    };
    let samples = data.split(&a.split)?;
    if samples.is_empty() {
        return Err(CliError::data(format!("{} split is empty", a.split)));
    }
    let prepared = model.prepare_all(&samples);

    let (report, generations) = if a.gold {
        let ids: Vec<String> = prepared.iter().map(|s| s.id.clone()).collect();
        let refs: Vec<Sentence> = prepared.iter().map(|s| s.reference.clone()).collect();
        let stats: Vec<_> = prepared.iter().map(|s| s.stats).collect();
        let report = evaluate(&ids, &refs, &refs, &stats, &edges).map_err(CliError::data)?;
        (report, refs)
    } else {
        let (report, gens) = evaluate_model(&model, &prepared, &edges)?;
        (report, gens.into_iter().map(|g| g.words).collect())
    };

    let out_dir = a.out.clone().unwrap_or_else(|| {
        a.checkpoint.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
    });
    create_dir(&out_dir)?;
    let output = EvalOutput {
        command: "eval",
        seed: model.config.seed,
        config: model.config.clone(),
        checkpoint_sha256: sha256_hex(&bytes),
        checkpoint_epoch: epoch,
        split: a.split.clone(),
        gold: a.gold,
        bucket_edges: edges,
        generations: prepared
            .iter()
            .zip(&generations)
            .map(|(s, w)| Generated {
                id: s.id.clone(),
                comment: w.join(" "),
            })
            .collect(),
        report,
    };
    let json_path = out_dir.join(format!("eval_{}.json", a.split));
    write_atomic(&json_path, &to_json_pretty(&output))?;
    let config_json = serde_json::to_string(&output.config).expect("serializable");
    let csv = format!(
        "# seed={} config={config_json}\n{}",
        output.seed,
        buckets_csv(&output.report.buckets)
    );
    let csv_path = out_dir.join(format!("buckets_{}.csv", a.split));
    write_atomic(&csv_path, csv.as_bytes())?;

    let s = &output.report.scores;
    println!("samples  {}", output.generations.len());
    for (name, v) in [
        ("BLEU-1", s.bleu_1),
        ("BLEU-2", s.bleu_2),
        ("BLEU-3", s.bleu_3),
        ("BLEU-4", s.bleu_4),
        ("CIDEr", s.cider),
        ("METEOR", s.meteor),
        ("RIBES", s.ribes),
        ("ROUGE-L", s.rouge_l),
    ] {
        println!("{name:<8} {v:.4}");
    }
    println!("report   {}", json_path.display());
    println!("buckets  {}", csv_path.display());
    Ok(())
}
