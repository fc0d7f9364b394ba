use std::fs::File;
use std::io::{BufWriter, Write};

use serde::Serialize;
use serde_json::json;
use treesum_core::model::{fit, save_checkpoint, LogEntry, Trainer};
use treesum_core::{ModelConfig, ModelError, Summarizer};

use crate::args::TrainArgs;
use crate::io::{create_dir, read_text, PreparedDir};
use crate::CliError;

pub const CHECKPOINT: &str = "best.ckpt";
pub const LOG: &str = "train.log.jsonl";

fn config_from(a: &TrainArgs) -> Result<ModelConfig, CliError> {
    let mut c = match &a.config {
        Some(path) => ModelConfig::from_toml(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => ModelConfig::default(),
    };
    if let Some(v) = a.encoder {
        c.encoder = v;
    }
    if let Some(v) = a.layers {
        c.layers = v.into();
    }
    if let Some(v) = a.dim {
        c.dim = v;
    }
    if let Some(v) = a.epochs {
        c.epochs = v;
    }
    if let Some(v) = a.batch {
        c.batch = v;
    }
    if let Some(v) = a.lr {
        c.lr = v;
    }
    if let Some(v) = a.dropout {
        c.dropout = v;
    }
    if let Some(v) = a.beam {
        c.beam = v;
    }
    if let Some(v) = a.max_len {
        c.max_decode_len = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if c.epochs == 0 {
        return Err(CliError::Usage("epochs must be at least 1".into()));
    }
    Ok(c)
}

struct Log {
    out: BufWriter<File>,
    error: Option<std::io::Error>,
}

impl Log {
    fn line<T: Serialize>(&mut self, value: &T) {
        if self.error.is_some() {
            return;
        }
        let mut text = serde_json::to_vec(value).expect("serializable");
        text.push(b'\n');
        if let Err(e) = self.out.write_all(&text).and_then(|_| self.out.flush()) {
            self.error = Some(e);
        }
    }
}

pub fn run(a: TrainArgs) -> Result<(), CliError> {
    let config = config_from(&a)?;
    let data = PreparedDir::open(&a.data)?;
    let train_samples = data.split("train")?;
    let valid_samples = data.split("valid")?;
    if train_samples.is_empty() {
        return Err(CliError::data("training split is empty"));
    }
    let model = Summarizer::new(config.clone(), data.ast_vocab.clone(), data.comment_vocab.clone())?;
    let train = model.prepare_all(&train_samples);
    let valid = model.prepare_all(&valid_samples);

    create_dir(&a.out)?;
    let log_path = a.out.join(LOG);
    let file = File::create(&log_path).map_err(|e| CliError::data(format!("{}: {e}", log_path.display())))?;
    let mut log = Log {
        out: BufWriter::new(file),
        error: None,
    };
    log.line(&json!({
        "type": "run",
        "seed": config.seed,
        "config": config,
        "data_manifest_sha256": data.manifest_sha256()?,
        "train": train.len(),
        "valid": valid.len(),
    }));

    let ckpt_path = a.out.join(CHECKPOINT);
    let mut trainer = Trainer::new(model);
    let result = fit(
        &mut trainer,
        &train,
        &valid,
        |entry| {
            if let LogEntry::Epoch(r) = entry {
                let bleu = r.valid_bleu_4.map_or("-".to_string(), |b| format!("{b:.4}"));
                eprintln!("epoch {:>3}  loss {:.4}  valid BLEU-4 {bleu}", r.epoch, r.train_loss);
            }
            log.line(entry);
        },
        |m, rec| {
            crate::io::write_atomic(&ckpt_path, &save_checkpoint(m, Some(rec.epoch)))
                .map_err(|e| ModelError::Checkpoint(e.to_string()))
        },
    );
    match result {
        Ok(outcome) => {
            log.line(&json!({
                "type": "done",
                "best_epoch": outcome.best_epoch,
                "best_valid_bleu_4": outcome.best_bleu_4,
            }));
            if let Some(e) = log.error {
                return Err(CliError::data(format!("{}: {e}", log_path.display())));
            }
            println!("best epoch {}", outcome.best_epoch);
            println!("best valid BLEU-4 {:.4}", outcome.best_bleu_4);
            println!("checkpoint {}", ckpt_path.display());
            Ok(())
        }
        Err(e) => {
            log.line(&json!({"type": "abort", "error": e.to_string()}));
            let err = CliError::from(e);
            match err {
                CliError::Numeric(msg) if ckpt_path.exists() => Err(CliError::Numeric(format!(
                    "{msg}; last good checkpoint kept at {}",
                    ckpt_path.display()
                ))),
                other => Err(other),
            }
        }
    }
}
