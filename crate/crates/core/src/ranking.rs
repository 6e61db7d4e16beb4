//! Ranked lists of suspicious methods and their JSON-lines file format.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub fqn: String,
    #[serde(with = "score_serde")]
    pub score: f64,
    /// 1-based position.
    pub rank: usize,
    /// Technique that contributed this entry (set on fused lists).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<String>,
}

/// Ordered suspicious methods produced by one technique.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub technique: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new(technique: impl Into<String>) -> Self {
        RankedList {
            technique: technique.into(),
            entries: Vec::new(),
        }
    }

    /// Build from FQNs already in rank order; later duplicates are dropped.
    /// Scores are the reciprocal rank.
    pub fn from_fqns<S: Into<String>>(technique: impl Into<String>, fqns: impl IntoIterator<Item = S>) -> Self {
        let mut list = RankedList::new(technique);
        for f in fqns {
            let f = f.into();
            if !list.contains(&f) {
                let score = 1.0 / (list.len() + 1) as f64;
                list.push(f, score);
            }
        }
        list
    }

    /// Build from scored FQNs: sorts by descending score, ties broken by FQN.
    pub fn from_scores(technique: impl Into<String>, mut scored: Vec<(String, f64)>) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut list = RankedList::new(technique);
        for (fqn, score) in scored {
            list.push(fqn, score);
        }
        list
    }

    /// Append with the next rank. The caller keeps FQNs unique.
    pub fn push(&mut self, fqn: impl Into<String>, score: f64) {
        let rank = self.entries.len() + 1;
        self.entries.push(RankedEntry {
            fqn: fqn.into(),
            score,
            rank,
            technique: None,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, fqn: &str) -> bool {
        self.entries.iter().any(|e| e.fqn == fqn)
    }

    /// 1-based rank of `fqn`.
    pub fn rank_of(&self, fqn: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.fqn == fqn).map(|e| e.rank)
    }

    pub fn fqns(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.fqn.as_str())
    }

    /// First `n` entries.
    pub fn truncated(&self, n: usize) -> RankedList {
        RankedList {
            technique: self.technique.clone(),
            entries: self.entries.iter().take(n).cloned().collect(),
        }
    }

    /// Check ranks are 1..=n, FQNs unique and scores non-increasing.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(format!("entry {} has rank {}", i + 1, e.rank));
            }
            if !seen.insert(e.fqn.as_str()) {
                return Err(format!("duplicate fqn {}", e.fqn));
            }
            if i > 0 && e.score > self.entries[i - 1].score {
                return Err(format!("score increases at rank {}", e.rank));
            }
        }
        Ok(())
    }

    /// JSON-lines rendering: one `{"rank","fqn","score","technique"}` per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = JsonlEntry {
                rank: e.rank,
                fqn: e.fqn.clone(),
                score: ScoreOut(e.score),
                technique: e.technique.clone().unwrap_or_else(|| self.technique.clone()),
            };
            out.push_str(&serde_json::to_string(&line).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    /// Parse the JSON-lines format. Entries are ordered by their `rank`
    /// field; duplicate FQNs keep the better rank. When `technique` is
    /// given it overrides the per-line labels.
    pub fn from_jsonl(text: &str, technique: Option<&str>, origin: &str) -> Result<RankedList, RankingError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: JsonlEntryIn = serde_json::from_str(line).map_err(|e| RankingError::Format {
                path: origin.to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
            rows.push((row.rank.unwrap_or(usize::MAX), n + 1, row));
        }
        rows.sort_by_key(|(rank, line, _)| (*rank, *line));
        let label = technique
            .map(str::to_string)
            .or_else(|| rows.first().and_then(|(_, _, r)| r.technique.clone()))
            .unwrap_or_else(|| "external".to_string());
        let mut list = RankedList::new(label);
        let mut last_score = f64::INFINITY;
        for (_, line, row) in rows {
            if list.contains(&row.fqn) {
                continue;
            }
            // missing scores fall back to reciprocal rank; keep monotone
            let score = match row.score {
                Some(ScoreIn::Number(x)) => x,
                Some(ScoreIn::Text(t)) => parse_special_score(&t).ok_or_else(|| RankingError::Format {
                    path: origin.to_string(),
                    line,
                    message: format!("score `{t}` of {} is not a number", row.fqn),
                })?,
                None => 1.0 / (list.len() + 1) as f64,
            }
            .min(last_score);
            last_score = score;
            list.push(row.fqn, score);
        }
        Ok(list)
    }

    pub fn read_jsonl(path: &Path, technique: Option<&str>) -> Result<RankedList, RankingError> {
        let text = std::fs::read_to_string(path).map_err(|source| RankingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RankedList::from_jsonl(&text, technique, &path.display().to_string())
    }
}

#[derive(Serialize)]
struct JsonlEntry {
    rank: usize,
    fqn: String,
    score: ScoreOut,
    technique: String,
}

/// JSON has no infinities; they are written as `"inf"` / `"-inf"`.
struct ScoreOut(f64);

impl Serialize for ScoreOut {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            x if x == f64::INFINITY => s.serialize_str("inf"),
            x if x == f64::NEG_INFINITY => s.serialize_str("-inf"),
            x => s.serialize_f64(x),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScoreIn {
    Number(f64),
    Text(String),
}

mod score_serde {
    use super::{parse_special_score, ScoreIn, ScoreOut};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        ScoreOut(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match ScoreIn::deserialize(d)? {
            ScoreIn::Number(x) => Ok(x),
            ScoreIn::Text(t) => {
                parse_special_score(&t).ok_or_else(|| serde::de::Error::custom(format!("bad score `{t}`")))
            }
        }
    }
}

fn parse_special_score(t: &str) -> Option<f64> {
    match t.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

#[derive(Deserialize)]
struct JsonlEntryIn {
    #[serde(default)]
    rank: Option<usize>,
    fqn: String,
    #[serde(default)]
    score: Option<ScoreIn>,
    #[serde(default)]
    technique: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn from_scores_orders_and_breaks_ties() {
        let l = RankedList::from_scores("t", vec![("b".into(), 1.0), ("a".into(), 1.0), ("c".into(), 2.0)]);
        assert_eq!(l.fqns().collect::<Vec<_>>(), vec!["c", "a", "b"]);
        l.validate().unwrap();
    }

    #[test]
    fn jsonl_is_ordered_by_rank_field() {
        let text = "{\"rank\":2,\"fqn\":\"b\",\"score\":0.5,\"technique\":\"sbir\"}\n\n{\"rank\":1,\"fqn\":\"a\",\"score\":0.9,\"technique\":\"sbir\"}\n";
        let l = RankedList::from_jsonl(text, None, "x").unwrap();
        assert_eq!(l.technique, "sbir");
        assert_eq!(l.fqns().collect::<Vec<_>>(), vec!["a", "b"]);
        let err = RankedList::from_jsonl("{\"rank\":1}", None, "f.jsonl").unwrap_err();
        assert!(err.to_string().starts_with("f.jsonl:1:"), "{err}");
    }

    #[test]
    fn infinite_scores_survive_jsonl() {
        let l = RankedList::from_scores("dstar2", vec![("a".into(), f64::INFINITY), ("b".into(), 2.0)]);
        let text = l.to_jsonl();
        assert!(text.contains("\"score\":\"inf\""), "{text}");
        assert_eq!(RankedList::from_jsonl(&text, None, "m").unwrap(), l);
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(serde_json::from_str::<RankedList>(&json).unwrap(), l);
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(fqns in proptest::collection::vec("[a-z]{1,6}", 0..20)) {
            let list = RankedList::from_fqns("ochiai", fqns);
            let back = RankedList::from_jsonl(&list.to_jsonl(), None, "mem").unwrap();
            prop_assert_eq!(back.fqns().collect::<Vec<_>>(), list.fqns().collect::<Vec<_>>());
            back.validate().unwrap();
        }
    }
}
