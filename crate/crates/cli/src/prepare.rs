use std::collections::BTreeMap;

use serde::Serialize;
use treesum_core::corpus::{
    build_vocab, filter_record, filter_sample, split_dataset, write_jsonl, DropReason, FilterConfig, MethodInfo,
    RawRecord, SplitRatios, VocabLimits,
};
use treesum_core::synth::synth_records;

use crate::args::{PrepareArgs, SynthArgs};
use crate::io::{
    create_dir, parse_records, read_bytes, sha256_hex, split_file, to_json_pretty, write_atomic, AST_VOCAB,
    COMMENT_VOCAB, MANIFEST,
};
use crate::CliError;

#[derive(Serialize)]
struct Settings {
    ratios: SplitRatios,
    id_limit: usize,
    literal_limit: usize,
    comment_limit: usize,
    name_rules: bool,
    max_nodes: usize,
    min_comment_words: usize,
}

#[derive(Serialize)]
struct VocabInfo {
    file: &'static str,
    size: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    command: &'static str,
    seed: u64,
    settings: Settings,
    corpus_sha256: String,
    records: usize,
    kept: usize,
    drops: BTreeMap<&'static str, usize>,
    splits: BTreeMap<&'static str, Vec<String>>,
    ast_vocab: VocabInfo,
    comment_vocab: VocabInfo,
}

pub fn run(a: PrepareArgs) -> Result<(), CliError> {
    let ratios = SplitRatios {
        train: a.ratios[0],
        valid: a.ratios[1],
        test: a.ratios[2],
    };
    let bytes = read_bytes(&a.corpus)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::data(format!("{}: {e}", a.corpus.display())))?;
    let records = parse_records(&a.corpus, &text)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: corpus is empty", a.corpus.display())));
    }

    let config = FilterConfig::default();
    let mut drops: BTreeMap<&'static str, usize> = DropReason::ALL.iter().map(|r| (r.as_str(), 0)).collect();
    let mut kept = Vec::new();
    for r in &records {
        let outcome = if a.no_filter {
            filter_sample(&r.id, &r.ast, MethodInfo::default(), &r.comment, config)
        } else {
            filter_record(r, config)
        };
        match outcome {
            Ok(s) => kept.push((s, r)),
            Err(reason) => *drops.get_mut(reason.as_str()).expect("all reasons listed") += 1,
        }
    }
    if kept.is_empty() {
        return Err(CliError::data("every record was filtered out"));
    }
    let n_kept = kept.len();
    let (train, valid, test) = split_dataset(kept, ratios, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    if train.is_empty() {
        return Err(CliError::data("training split is empty"));
    }
    let limits = VocabLimits {
        identifiers: a.id_limit,
        literals: a.literal_limit,
        comment_words: a.comment_limit,
    };
    let train_samples: Vec<_> = train.iter().map(|(s, _)| s.clone()).collect();
    let (ast_vocab, comment_vocab) = build_vocab(&train_samples, limits).map_err(CliError::data)?;

    create_dir(&a.out)?;
    let mut splits = BTreeMap::new();
    for (name, part) in [("train", &train), ("valid", &valid), ("test", &test)] {
        let out: Vec<RawRecord> = part
            .iter()
            .map(|(s, r)| RawRecord {
                method_name: r.method_name.clone(),
                type_name: r.type_name.clone(),
                statements: r.statements,
                ..s.to_record()
            })
            .collect();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &out).map_err(CliError::data)?;
        write_atomic(&a.out.join(split_file(name)), &buf)?;
        splits.insert(name, out.into_iter().map(|r| r.id).collect());
    }
    write_atomic(&a.out.join(AST_VOCAB), ast_vocab.to_tsv().as_bytes())?;
    write_atomic(&a.out.join(COMMENT_VOCAB), comment_vocab.to_tsv().as_bytes())?;

    let manifest = Manifest {
        command: "prepare",
        seed: a.seed,
        settings: Settings {
            ratios,
            id_limit: a.id_limit,
            literal_limit: a.literal_limit,
            comment_limit: a.comment_limit,
            name_rules: !a.no_filter,
            max_nodes: config.max_nodes,
            min_comment_words: config.min_comment_words,
        },
        corpus_sha256: sha256_hex(&bytes),
        records: records.len(),
        kept: n_kept,
        drops,
        splits,
        ast_vocab: VocabInfo {
            file: AST_VOCAB,
            size: ast_vocab.len(),
            sha256: ast_vocab.fingerprint(),
        },
        comment_vocab: VocabInfo {
            file: COMMENT_VOCAB,
            size: comment_vocab.len(),
            sha256: comment_vocab.fingerprint(),
        },
    };
    write_atomic(&a.out.join(MANIFEST), &to_json_pretty(&manifest))?;

    println!("records {}", manifest.records);
    println!("kept {}", manifest.kept);
    println!("dropped {}", manifest.records - manifest.kept);
    for (reason, n) in &manifest.drops {
        println!("  {reason:<14} {n}");
    }
    println!(
        "split train {} valid {} test {}",
        manifest.splits["train"].len(),
        manifest.splits["valid"].len(),
        manifest.splits["test"].len()
    );
    println!("vocab ast {} comment {}", ast_vocab.len(), comment_vocab.len());
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let records = synth_records(a.count, a.seed, &a.prefix);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records).map_err(CliError::data)?;
    write_atomic(&a.out, &buf)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}
