use std::path::Path;

use serde::Serialize;
use treesum_core::ast::{parse_json_ast, parse_mini_source};
use treesum_core::model::load_checkpoint;
use treesum_core::tree::source_tokens;
use treesum_core::{Ast, Generation, ModelConfig, Summarizer};

use crate::args::{InspectArgs, SummarizeArgs};
use crate::io::{read_bytes, read_text};
use crate::CliError;

fn load_model(path: &Path) -> Result<Summarizer, CliError> {
    let bytes = read_bytes(path)?;
    let (model, _) = load_checkpoint(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(model)
}

/// A `.json` file holds a tree; anything else is mini-language source.
pub fn read_program(path: &Path) -> Result<Ast, CliError> {
    let text = read_text(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        parse_json_ast(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    } else {
        parse_mini_source(&text).map_err(|e| CliError::data(format!("{}:{e}", path.display())))
    }
}

fn decode(model: &Summarizer, ast: &Ast, beam: Option<usize>, max_len: Option<usize>) -> Result<Generation, CliError> {
    let beam = beam.unwrap_or(model.config.beam);
    if beam == 0 {
        return Err(CliError::Usage("--beam must be at least 1".into()));
    }
    let max_len = max_len.unwrap_or(model.config.max_decode_len);
    Ok(model.generate(&model.prepare_source(ast), beam, max_len)?)
}

#[derive(Serialize)]
struct Column {
    node: usize,
    token: String,
}

#[derive(Serialize)]
struct AttentionDump<'a> {
    file: String,
    comment: String,
    words: &'a [String],
    seed: u64,
    config: &'a ModelConfig,
    columns: Vec<Column>,
    /// One row per word, one column per encoder position.
    attention: &'a [Vec<f64>],
}

pub fn summarize(a: SummarizeArgs) -> Result<(), CliError> {
    let model = load_model(&a.checkpoint)?;
    // Parse everything first so a bad file fails before any output.
    let programs = a.files.iter().map(|f| read_program(f)).collect::<Result<Vec<_>, _>>()?;
    for (file, ast) in a.files.iter().zip(&programs) {
        let g = decode(&model, ast, a.beam, a.max_len)?;
        let comment = g.words.join(" ");
        if a.attention {
            let dump = AttentionDump {
                file: file.display().to_string(),
                comment,
                words: &g.words,
                seed: model.config.seed,
                config: &model.config,
                columns: source_tokens(ast, model.config.encoder)
                    .into_iter()
                    .map(|(token, node)| Column { node, token })
                    .collect(),
                attention: &g.attention,
            };
            println!("{}", serde_json::to_string(&dump).expect("serializable"));
        } else {
            println!("{comment}");
        }
    }
    Ok(())
}

/// Subtree rooted at `i` as an s-expression, cut to `limit` characters.
fn subtree_text(ast: &Ast, i: usize, limit: usize) -> String {
    fn walk(ast: &Ast, i: usize, out: &mut String, limit: usize) {
        if out.len() > limit {
            return;
        }
        if ast.children(i).is_empty() {
            out.push_str(ast.label(i));
            return;
        }
        out.push('(');
        out.push_str(ast.label(i));
        for &c in ast.children(i) {
            out.push(' ');
            walk(ast, c, out, limit);
        }
        out.push(')');
    }
    let mut s = String::new();
    walk(ast, i, &mut s, limit);
    if s.chars().count() > limit {
        s = s.chars().take(limit.saturating_sub(3)).collect::<String>() + "...";
    }
    s
}

pub fn inspect(a: InspectArgs) -> Result<(), CliError> {
    let model = load_model(&a.checkpoint)?;
    let ast = read_program(&a.file)?;
    let g = decode(&model, &ast, a.beam, a.max_len)?;
    let columns = source_tokens(&ast, model.config.encoder);
    println!("file     {}", a.file.display());
    println!("encoder  {} (seed {})", model.config.encoder, model.config.seed);
    println!("comment  {}", g.words.join(" "));
    for (word, row) in g.words.iter().zip(&g.attention) {
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        for (rank, &col) in order.iter().take(a.top.max(1)).enumerate() {
            let (token, node) = &columns[col];
            let head = if rank == 0 { word.as_str() } else { "" };
            println!(
                "{head:<12} {:.3}  #{node:<3} {token:<12} {}",
                row[col],
                subtree_text(&ast, *node, 60)
            );
        }
    }
    Ok(())
}
