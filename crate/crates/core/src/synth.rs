//! Seeded generator of mini-language functions paired with comments that
//! follow from the code, for fixtures, smoke runs and desk-scale studies.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{mini::statement_count, parse_mini_source, MiniParseError};
use crate::corpus::RawRecord;

/// One generated function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthProgram {
    pub method_name: String,
    pub source: String,
    pub comment: String,
}

const VARS: [&str; 16] = [
    "a", "b", "x", "y", "n", "m", "v", "w", "count", "size", "total", "value", "left", "right", "limit", "score",
];
const LISTS: [&str; 8] = ["xs", "items", "values", "list", "data", "nums", "rows", "queue"];
const NOUNS: [&str; 10] = [
    "Value", "Count", "Total", "Score", "Size", "Item", "Entry", "Result", "Amount", "Weight",
];
const FUNCS: [&str; 8] = ["f", "g", "h", "norm", "scale", "wrap", "trim", "load"];

fn two_vars<R: Rng>(rng: &mut R) -> (&'static str, &'static str) {
    let picked: Vec<&&str> = VARS.choose_multiple(rng, 2).collect();
    (picked[0], picked[1])
}

fn name<R: Rng>(rng: &mut R, verbs: &[&str]) -> String {
    format!("{}{}", verbs.choose(rng).expect("nonempty"), NOUNS.choose(rng).expect("nonempty"))
}

fn arithmetic<R: Rng>(rng: &mut R) -> SynthProgram {
    let (a, b) = two_vars(rng);
    let (op, what) = *[("+", "sum"), ("-", "difference"), ("*", "product"), ("/", "quotient"), ("%", "remainder")]
        .choose(rng)
        .expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["compute", "calc", "combine"]),
        source: format!("fn NAME({a}, {b}) {{ return {a} {op} {b}; }}"),
        comment: format!("returns the {what} of {a} and {b}"),
    }
}

fn extreme<R: Rng>(rng: &mut R) -> SynthProgram {
    let (a, b) = two_vars(rng);
    let (op, what) = *[(">", "larger"), ("<", "smaller")].choose(rng).expect("nonempty");
    let source = if rng.gen_bool(0.5) {
        format!("fn NAME({a}, {b}) {{ if ({a} {op} {b}) {{ return {a}; }} else {{ return {b}; }} }}")
    } else {
        format!("fn NAME({a}, {b}) {{ if ({a} {op} {b}) {{ return {a}; }} return {b}; }}")
    };
    SynthProgram {
        method_name: name(rng, &["pick", "choose", "select"]),
        source,
        comment: format!("returns the {what} of {a} and {b}"),
    }
}

fn predicate<R: Rng>(rng: &mut R) -> SynthProgram {
    let s = *LISTS.choose(rng).expect("nonempty");
    let k = rng.gen_range(1..10);
    let (cond, what) = match rng.gen_range(0..3) {
        0 => ("== 0".to_string(), format!("checks whether {s} is empty")),
        1 => (format!("> {k}"), format!("checks whether {s} has more than {k} elements")),
        _ => (format!("< {k}"), format!("checks whether {s} has fewer than {k} elements")),
    };
    SynthProgram {
        method_name: name(rng, &["check", "probe", "has"]),
        source: format!("fn NAME({s}) {{ return len({s}) {cond}; }}"),
        comment: what,
    }
}

fn reduce<R: Rng>(rng: &mut R) -> SynthProgram {
    let xs = *LISTS.choose(rng).expect("nonempty");
    let acc = ["t", "acc", "r"].choose(rng).expect("nonempty");
    let (init, op, what) = *[("0", "+", "sums"), ("1", "*", "multiplies")].choose(rng).expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["fold", "reduce", "aggregate"]),
        source: format!(
            "fn NAME({xs}) {{ {acc} = {init}; i = 0; while (i < len({xs})) {{ {acc} = {acc} {op} get({xs}, i); i = i + 1; }} return {acc}; }}"
        ),
        comment: format!("{what} the elements of {xs}"),
    }
}

fn count_matches<R: Rng>(rng: &mut R) -> SynthProgram {
    let xs = *LISTS.choose(rng).expect("nonempty");
    let v = *["v", "target", "key", "needle"].choose(rng).expect("nonempty");
    let (op, what) = *[("==", "equal to"), (">", "greater than"), ("<", "less than")]
        .choose(rng)
        .expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["count", "tally", "number"]),
        source: format!(
            "fn NAME({xs}, {v}) {{ c = 0; i = 0; while (i < len({xs})) {{ if (get({xs}, i) {op} {v}) {{ c = c + 1; }} i = i + 1; }} return c; }}"
        ),
        comment: format!("counts the elements of {xs} {what} {v}"),
    }
}

fn find_index<R: Rng>(rng: &mut R) -> SynthProgram {
    let xs = *LISTS.choose(rng).expect("nonempty");
    let v = *["v", "target", "key", "needle"].choose(rng).expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["find", "locate", "search"]),
        source: format!(
            "fn NAME({xs}, {v}) {{ i = 0; while (i < len({xs})) {{ if (get({xs}, i) == {v}) {{ return i; }} i = i + 1; }} return -1; }}"
        ),
        comment: format!("returns the index of {v} in {xs}"),
    }
}

fn clamp<R: Rng>(rng: &mut R) -> SynthProgram {
    let v = *["v", "x", "value", "score"].choose(rng).expect("nonempty");
    let (lo, hi) = *[("lo", "hi"), ("low", "high"), ("min", "max")].choose(rng).expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["clamp", "bound", "limit"]),
        source: format!(
            "fn NAME({v}, {lo}, {hi}) {{ if ({v} < {lo}) {{ return {lo}; }} if ({v} > {hi}) {{ return {hi}; }} return {v}; }}"
        ),
        comment: format!("clamps {v} between {lo} and {hi}"),
    }
}

fn output<R: Rng>(rng: &mut R) -> SynthProgram {
    let v = *VARS.choose(rng).expect("nonempty");
    let (call, what) = *[("print", "prints"), ("log", "logs"), ("send", "sends"), ("save", "saves")]
        .choose(rng)
        .expect("nonempty");
    let msg = ["done", "value", "result", "error"].choose(rng).expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["emit", "write", "show"]),
        source: format!("fn NAME({v}) {{ {call}(\"{msg}\", {v}); }}"),
        comment: format!("{what} {v} with a {msg} message"),
    }
}

fn compose<R: Rng>(rng: &mut R) -> SynthProgram {
    let picked: Vec<&&str> = FUNCS.choose_multiple(rng, 2).collect();
    let (f, g) = (*picked[0], *picked[1]);
    let x = *VARS.choose(rng).expect("nonempty");
    SynthProgram {
        method_name: name(rng, &["apply", "run", "chain"]),
        source: format!("fn NAME({x}) {{ return {f}({g}({x})); }}"),
        comment: format!("applies {g} and then {f} to {x}"),
    }
}

fn swap_sign<R: Rng>(rng: &mut R) -> SynthProgram {
    let x = *VARS.choose(rng).expect("nonempty");
    let (src, what) = if rng.gen_bool(0.5) {
        (
            format!("fn NAME({x}) {{ if ({x} < 0) {{ return -{x}; }} return {x}; }}"),
            format!("returns the absolute value of {x}"),
        )
    } else {
        (format!("fn NAME({x}) {{ return -{x}; }}"), format!("returns the negation of {x}"))
    };
    SynthProgram {
        method_name: name(rng, &["fix", "adjust", "flip"]),
        source: src,
        comment: what,
    }
}

type Template = fn(&mut ChaCha8Rng) -> SynthProgram;

const TEMPLATES: [Template; 10] = [
    arithmetic,
    extreme,
    predicate,
    reduce,
    count_matches,
    find_index,
    clamp,
    output,
    compose,
    swap_sign,
];

/// `count` distinct programs (by source). The same seed always yields the
/// same list.
///
/// # Panics
///
/// When `count` exceeds the number of distinct bodies the templates can
/// produce (a few thousand).
pub fn synth_programs(count: usize, seed: u64) -> Vec<SynthProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 1000 * (count + 10), "template space exhausted");
        let t = TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
        let mut p = t(&mut rng);
        p.source = p.source.replace("NAME", &p.method_name);
        // Names are not part of the key, so bodies stay unique.
        let body = p.source.split_once('(').map(|(_, rest)| rest.to_string()).unwrap_or_default();
        if seen.insert(body) {
            out.push(p);
        }
    }
    out
}

/// Parses a program into a corpus record with id `{prefix}{index}`.
pub fn to_record(p: &SynthProgram, id: String) -> Result<RawRecord, MiniParseError> {
    let ast = parse_mini_source(&p.source)?;
    let statements = statement_count(&ast);
    Ok(RawRecord {
        id,
        method_name: p.method_name.clone(),
        comment: p.comment.clone(),
        ast,
        type_name: None,
        statements,
    })
}

/// Corpus records for [`synth_programs`], ids `{prefix}{i:05}`.
pub fn synth_records(count: usize, seed: u64, prefix: &str) -> Vec<RawRecord> {
    synth_programs(count, seed)
        .iter()
        .enumerate()
        .map(|(i, p)| to_record(p, format!("{prefix}{i:05}")).expect("generated programs parse"))
        .collect()
}
