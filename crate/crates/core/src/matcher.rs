//! Name repair for code elements emitted by a chat model.
//!
//! A query name is matched against the real FQNs of a program in three
//! phases, returning as soon as one phase produces results:
//!
//! 1. **containment**: entities whose split components include every
//!    component of the query;
//! 2. **near miss**: entities within a small edit distance of the query;
//! 3. **fallback**: the few entities closest to the query.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("empty query name")]
    EmptyQuery,
    #[error("no entities to match against")]
    NoEntities,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// Phase 2 accepts entities with distance strictly below this value.
    pub edit_distance_threshold: usize,
    /// Number of entities returned by phase 3.
    pub fallback_count: usize,
    /// Characters that separate name components.
    pub delimiters: Vec<char>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            edit_distance_threshold: 5,
            fallback_count: 5,
            delimiters: vec!['.', '/', '('],
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.edit_distance_threshold == 0 {
            return Err("matcher.edit_distance_threshold must be > 0".into());
        }
        if self.fallback_count == 0 {
            return Err("matcher.fallback_count must be > 0".into());
        }
        Ok(())
    }

    fn is_delimiter(&self, c: char) -> bool {
        // argument lists are split too, and the closing paren is dropped
        self.delimiters.contains(&c) || c == ')' || c == ','
    }
}

/// Which phase produced a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPhase {
    Containment,
    NearMiss,
    Closest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    pub phase: MatchPhase,
    pub names: Vec<String>,
}

impl MatchOutcome {
    /// The single entity the query denotes, if phase 1 or 2 found exactly one.
    pub fn resolved(&self) -> Option<&str> {
        match (self.phase, self.names.as_slice()) {
            (MatchPhase::Containment | MatchPhase::NearMiss, [one]) => Some(one),
            _ => None,
        }
    }
}

/// Split a name into its non-empty, whitespace-trimmed components.
pub fn split_components<'a>(name: &'a str, cfg: &MatcherConfig) -> Vec<&'a str> {
    name.split(|c| cfg.is_delimiter(c))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Levenshtein distance with unit costs, over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

fn contains_all(entity: &[&str], query: &[&str]) -> bool {
    let mut pool: Vec<&str> = entity.to_vec();
    query.iter().all(|q| match pool.iter().position(|e| e == q) {
        Some(i) => {
            pool.swap_remove(i);
            true
        }
        None => false,
    })
}

/// Match `query` against `entities`, reporting which phase fired.
pub fn postprocess_detailed<S: AsRef<str>>(
    query: &str,
    entities: &[S],
    cfg: &MatcherConfig,
) -> Result<MatchOutcome, MatchError> {
    if query.trim().is_empty() {
        return Err(MatchError::EmptyQuery);
    }
    if entities.is_empty() {
        return Err(MatchError::NoEntities);
    }
    let query_parts = split_components(query, cfg);
    if !query_parts.is_empty() {
        let names: Vec<String> = entities
            .iter()
            .map(AsRef::as_ref)
            .filter(|e| contains_all(&split_components(e, cfg), &query_parts))
            .map(str::to_string)
            .collect();
        if !names.is_empty() {
            return Ok(MatchOutcome {
                phase: MatchPhase::Containment,
                names,
            });
        }
    }

    let mut scored: Vec<(usize, &str)> = entities
        .iter()
        .map(|e| (levenshtein(query, e.as_ref()), e.as_ref()))
        .collect();
    let near: Vec<String> = scored
        .iter()
        .filter(|(d, _)| *d < cfg.edit_distance_threshold)
        .map(|(_, e)| e.to_string())
        .collect();
    if !near.is_empty() {
        return Ok(MatchOutcome {
            phase: MatchPhase::NearMiss,
            names: near,
        });
    }

    scored.sort_unstable();
    Ok(MatchOutcome {
        phase: MatchPhase::Closest,
        names: scored
            .into_iter()
            .take(cfg.fallback_count)
            .map(|(_, e)| e.to_string())
            .collect(),
    })
}

/// Match `query` against `entities` and return the matching names.
pub fn postprocess<S: AsRef<str>>(query: &str, entities: &[S], cfg: &MatcherConfig) -> Result<Vec<String>, MatchError> {
    postprocess_detailed(query, entities, cfg).map(|o| o.names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Full-matrix recurrence, kept independent of the two-row version.
    #[allow(clippy::needless_range_loop)]
    fn lev_matrix(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("flaw", "lawn"), 2);
        assert_eq!(levenshtein("same", "same"), 0);
    }

    #[test]
    fn split_handles_argument_lists() {
        let cfg = MatcherConfig::default();
        assert_eq!(
            split_components("org.joda.time.DateTime.DateTime(long, DateTimeZone)", &cfg),
            vec!["org", "joda", "time", "DateTime", "DateTime", "long", "DateTimeZone"]
        );
        assert_eq!(split_components("a/b/C.f()", &cfg), vec!["a", "b", "C", "f"]);
    }

    #[test]
    fn containment_is_multiset_and_case_sensitive() {
        let cfg = MatcherConfig::default();
        let ents = ["p.DateTime.DateTime(long)", "p.DateTime.plus(long)"];
        let out = postprocess("DateTime.DateTime", &ents, &cfg).unwrap();
        assert_eq!(out, vec!["p.DateTime.DateTime(long)"]);
        let out = postprocess_detailed("datetime", &ents, &cfg).unwrap();
        assert_ne!(out.phase, MatchPhase::Containment);
    }

    #[test]
    fn near_miss_then_closest() {
        let cfg = MatcherConfig::default();
        let ents = ["a.B.foo()", "a.B.bar()", "x.Y.zzzzzzzz()"];
        let near = postprocess_detailed("a.B.fooo()", &ents, &cfg).unwrap();
        assert_eq!(near.phase, MatchPhase::NearMiss);
        assert_eq!(near.names, vec!["a.B.foo()", "a.B.bar()"]);
        assert_eq!(near.resolved(), None);

        let far = postprocess_detailed("completely.Different.thing(int,int)", &ents, &cfg).unwrap();
        assert_eq!(far.phase, MatchPhase::Closest);
        assert_eq!(far.names.len(), 3);
    }

    #[test]
    fn closest_ties_break_lexicographically() {
        let cfg = MatcherConfig {
            fallback_count: 2,
            ..MatcherConfig::default()
        };
        let ents = ["zzzzzzzzzzzzc", "zzzzzzzzzzzzb", "zzzzzzzzzzzza"];
        let out = postprocess("qqqqqqqqqqqq", &ents, &cfg).unwrap();
        assert_eq!(out, vec!["zzzzzzzzzzzza", "zzzzzzzzzzzzb"]);
    }

    #[test]
    fn argument_errors() {
        let cfg = MatcherConfig::default();
        assert_eq!(postprocess::<&str>("x", &[], &cfg), Err(MatchError::NoEntities));
        assert_eq!(postprocess("  ", &["a"], &cfg), Err(MatchError::EmptyQuery));
    }

    proptest! {
        #[test]
        fn levenshtein_agrees_with_matrix(a in "[a-c.]{0,12}", b in "[a-c.]{0,12}") {
            prop_assert_eq!(levenshtein(&a, &b), lev_matrix(&a, &b));
        }

        #[test]
        fn levenshtein_is_a_metric(a in ".{0,30}", b in ".{0,30}", c in ".{0,30}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
            prop_assert_eq!(levenshtein(&a, &a), 0);
        }

        #[test]
        fn closest_phase_size(q in "[xyz]{8}", ents in proptest::collection::vec("[abc]{10,14}", 1..12)) {
            let cfg = MatcherConfig::default();
            let out = postprocess_detailed(&q, &ents, &cfg).unwrap();
            prop_assert_eq!(out.phase, MatchPhase::Closest);
            prop_assert_eq!(out.names.len(), cfg.fallback_count.min(ents.len()));
        }
    }
}
