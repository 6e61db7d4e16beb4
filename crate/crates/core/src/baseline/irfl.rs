//! BM25 ranking of methods against a bug report, with the title repeated
//! to boost its terms.

use super::BaselineError;
use crate::bug_input::BugReport;
use crate::index::RepoIndex;
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const IRFL_TECHNIQUE: &str = "boostn";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub title_weight: usize,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            title_weight: 3,
        }
    }
}

const STOP_WORDS: &[&str] = &[
    "a",
    "an",
    "and",
    "are",
    "as",
    "at",
    "be",
    "but",
    "by",
    "for",
    "if",
    "in",
    "is",
    "it",
    "of",
    "on",
    "or",
    "that",
    "the",
    "this",
    "to",
    "was",
    "with",
    "public",
    "private",
    "protected",
    "static",
    "final",
    "void",
    "return",
    "new",
    "int",
    "long",
    "boolean",
    "null",
    "true",
    "false",
    "class",
    "import",
    "package",
];

/// Lower-cased word tokens. Identifiers are split on camelCase and
/// underscores; the joined identifier is kept as well.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric() && c != '_') {
        if word.is_empty() {
            continue;
        }
        let parts = split_identifier(word);
        if parts.len() > 1 {
            push_token(&mut out, word.to_lowercase());
        }
        for p in parts {
            push_token(&mut out, p);
        }
    }
    out
}

fn push_token(out: &mut Vec<String>, t: String) {
    if t.chars().count() > 1 && !t.chars().all(|c| c.is_ascii_digit()) && !STOP_WORDS.contains(&t.as_str()) {
        out.push(t);
    }
}

fn split_identifier(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut parts = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            if !cur.is_empty() {
                parts.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let boundary = i > 0 && !cur.is_empty() && {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            (c.is_uppercase() && (prev.is_lowercase() || prev.is_ascii_digit()))
                || (c.is_uppercase() && prev.is_uppercase() && next_lower)
                || (c.is_ascii_digit() != prev.is_ascii_digit())
        };
        if boundary {
            parts.push(std::mem::take(&mut cur));
        }
        cur.push(c);
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    parts.into_iter().map(|p| p.to_lowercase()).collect()
}

fn document(m: &crate::index::MethodRecord) -> Vec<String> {
    let mut text = format!(
        "{} {} {} {}",
        m.path_name,
        m.class_name,
        m.method_name,
        m.arg_types.join(" ")
    );
    text.push('\n');
    text.push_str(&m.snippet);
    tokenize(&text)
}

fn query(report: &BugReport, title_weight: usize) -> Vec<String> {
    let title = tokenize(&report.title);
    let mut q = Vec::new();
    for _ in 0..title_weight.max(1) {
        q.extend(title.iter().cloned());
    }
    q.extend(tokenize(&report.description));
    q
}

/// BM25 over token lists. Query tokens count with multiplicity.
pub(crate) fn bm25(docs: &[Vec<String>], query: &[String], p: &Bm25Params) -> Vec<f64> {
    let n = docs.len() as f64;
    let avgdl = if docs.is_empty() {
        0.0
    } else {
        docs.iter().map(Vec::len).sum::<usize>() as f64 / n
    };
    let mut df: HashMap<&str, usize> = HashMap::new();
    let tfs: Vec<HashMap<&str, usize>> = docs
        .iter()
        .map(|d| {
            let mut tf = HashMap::new();
            for t in d {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            for t in tf.keys() {
                *df.entry(t).or_insert(0) += 1;
            }
            tf
        })
        .collect();
    docs.iter()
        .zip(&tfs)
        .map(|(d, tf)| {
            let norm = if avgdl > 0.0 {
                p.k1 * (1.0 - p.b + p.b * d.len() as f64 / avgdl)
            } else {
                p.k1
            };
            query
                .iter()
                .filter_map(|q| tf.get(q.as_str()).map(|&f| (q, f as f64)))
                .map(|(q, f)| {
                    let nq = df[q.as_str()] as f64;
                    let idf = (1.0 + (n - nq + 0.5) / (nq + 0.5)).ln();
                    idf * f * (p.k1 + 1.0) / (f + norm)
                })
                .fold(0.0, |acc, x| acc + x)
        })
        .collect()
}

pub fn irfl_score(
    index: &RepoIndex,
    report: Option<&BugReport>,
    params: &Bm25Params,
) -> Result<RankedList, BaselineError> {
    let report =
        report.ok_or_else(|| BaselineError::Precondition("IR-based localization needs a bug report".into()))?;
    let docs: Vec<Vec<String>> = index.methods().iter().map(document).collect();
    let scores = bm25(&docs, &query(report, params.title_weight), params);
    let scored = index
        .methods()
        .iter()
        .zip(scores)
        .map(|(m, s)| (m.fqn.clone(), s))
        .collect();
    Ok(RankedList::from_scores(IRFL_TECHNIQUE, scored))
}
