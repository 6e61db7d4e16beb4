//! Top-N, MAP and MRR against ground-truth buggy methods.

use crate::agents::{FlexFlOutput, Stage2Output};
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("bug {0} has results but no ground truth")]
    UnknownBug(String),
    #[error("{0}")]
    Invalid(String),
}

/// Buggy methods by bug id.
pub type Truth = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub bug_id: String,
    pub buggy_methods: BTreeSet<String>,
}

pub fn parse_truth(text: &str, origin: &str) -> Result<Truth, EvalError> {
    let mut truth = Truth::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EvalError::Format {
            path: origin.to_string(),
            line: n + 1,
            message,
        };
        let g: GroundTruth = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if g.buggy_methods.is_empty() {
            return Err(err(format!("bug {} lists no buggy methods", g.bug_id)));
        }
        if truth.insert(g.bug_id.clone(), g.buggy_methods).is_some() {
            return Err(err(format!("bug {} appears twice", g.bug_id)));
        }
    }
    Ok(truth)
}

pub fn load_truth(path: &Path) -> Result<Truth, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_truth(&text, &path.display().to_string())
}

/// Load per-bug results from `dir`: `<bug>.jsonl` ranked lists, or
/// `<bug>.json` full or stage-2 outputs (their final list is used).
pub fn load_results(dir: &Path) -> Result<BTreeMap<String, RankedList>, EvalError> {
    let io = |source| EvalError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut results = BTreeMap::new();
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let shown = path.display().to_string();
        let (bug, list) = match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => {
                let list = RankedList::read_jsonl(&path, None).map_err(|e| EvalError::Invalid(e.to_string()))?;
                (stem, list)
            }
            Some("json") => {
                let text = std::fs::read_to_string(&path).map_err(|source| EvalError::Io {
                    path: shown.clone(),
                    source,
                })?;
                let format = |e: serde_json::Error| EvalError::Format {
                    path: shown.clone(),
                    line: e.line(),
                    message: e.to_string(),
                };
                let value: serde_json::Value = serde_json::from_str(&text).map_err(format)?;
                if value.get("stage2").is_some() {
                    let out: FlexFlOutput = serde_json::from_value(value).map_err(format)?;
                    (out.bug_id.unwrap_or(stem), out.stage2.final_list)
                } else {
                    let out: Stage2Output = serde_json::from_value(value).map_err(format)?;
                    (stem, out.final_list)
                }
            }
            _ => continue,
        };
        if results.insert(bug.clone(), list).is_some() {
            return Err(EvalError::Invalid(format!(
                "{}: results for bug {bug} appear twice",
                dir.display()
            )));
        }
    }
    Ok(results)
}

/// 1-based position of the first buggy method.
pub fn first_hit_rank(list: &RankedList, buggy: &BTreeSet<String>) -> Option<usize> {
    list.fqns().position(|f| buggy.contains(f)).map(|i| i + 1)
}

/// Mean of Prec@k over the positions k holding buggy methods, divided by
/// the total number of buggy methods.
pub fn average_precision(list: &RankedList, buggy: &BTreeSet<String>) -> f64 {
    if buggy.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    let mut exact = Some(Fraction::ZERO);
    for (i, f) in list.fqns().enumerate() {
        if buggy.contains(f) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
            exact = exact.and_then(|q| q.add(hits as u128, (i + 1) as u128));
        }
    }
    match exact.and_then(|q| q.den.checked_mul(buggy.len() as u128).map(|d| (q.num, d))) {
        Some((num, den)) => num as f64 / den as f64,
        None => sum / buggy.len() as f64,
    }
}

/// Non-negative rational used to keep small sums exactly rounded.
#[derive(Clone, Copy)]
struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    const ZERO: Fraction = Fraction { num: 0, den: 1 };

    fn add(self, num: u128, den: u128) -> Option<Fraction> {
        let n = self.num.checked_mul(den)?.checked_add(num.checked_mul(self.den)?)?;
        let d = self.den.checked_mul(den)?;
        let g = gcd(n, d);
        Some(Fraction { num: n / g, den: d / g })
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn check(results: &BTreeMap<String, RankedList>, truth: &Truth) -> Result<(), EvalError> {
    match results.keys().find(|b| !truth.contains_key(*b)) {
        Some(b) => Err(EvalError::UnknownBug(b.clone())),
        None => Ok(()),
    }
}

/// Bugs of `truth` with a buggy method within the first `n` positions.
pub fn top_n(results: &BTreeMap<String, RankedList>, truth: &Truth, n: usize) -> Result<usize, EvalError> {
    if n == 0 {
        return Err(EvalError::Invalid("Top-N needs N >= 1".into()));
    }
    check(results, truth)?;
    Ok(results
        .iter()
        .filter(|(b, l)| first_hit_rank(l, &truth[*b]).is_some_and(|r| r <= n))
        .count())
}

/// Mean over every bug in `truth`; bugs without results count as 0.
pub fn mean_average_precision(results: &BTreeMap<String, RankedList>, truth: &Truth) -> Result<f64, EvalError> {
    check(results, truth)?;
    Ok(mean(truth, |b, buggy| {
        results.get(b).map_or(0.0, |l| average_precision(l, buggy))
    }))
}

pub fn mean_reciprocal_rank(results: &BTreeMap<String, RankedList>, truth: &Truth) -> Result<f64, EvalError> {
    check(results, truth)?;
    Ok(mean(truth, |b, buggy| {
        results
            .get(b)
            .and_then(|l| first_hit_rank(l, buggy))
            .map_or(0.0, |r| 1.0 / r as f64)
    }))
}

fn mean(truth: &Truth, f: impl Fn(&str, &BTreeSet<String>) -> f64) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().map(|(b, buggy)| f(b, buggy)).fold(0.0, |a, x| a + x) / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugMetrics {
    pub first_hit_rank: Option<usize>,
    pub avg_precision: f64,
    /// False when no results were supplied for the bug.
    pub ranked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bugs: usize,
    /// Top-N counts keyed by N.
    pub top_n: BTreeMap<usize, usize>,
    pub map: f64,
    pub mrr: f64,
    pub per_bug: BTreeMap<String, BugMetrics>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, EvalReport>,
}

pub const DEFAULT_TOP_N: [usize; 3] = [1, 3, 5];

pub fn evaluate(results: &BTreeMap<String, RankedList>, truth: &Truth, ns: &[usize]) -> Result<EvalReport, EvalError> {
    let mut top = BTreeMap::new();
    for &n in ns {
        top.insert(n, top_n(results, truth, n)?);
    }
    let per_bug = truth
        .iter()
        .map(|(b, buggy)| {
            let m = match results.get(b) {
                Some(l) => BugMetrics {
                    first_hit_rank: first_hit_rank(l, buggy),
                    avg_precision: average_precision(l, buggy),
                    ranked: true,
                },
                None => BugMetrics {
                    first_hit_rank: None,
                    avg_precision: 0.0,
                    ranked: false,
                },
            };
            (b.clone(), m)
        })
        .collect();
    Ok(EvalReport {
        bugs: truth.len(),
        top_n: top,
        map: mean_average_precision(results, truth)?,
        mrr: mean_reciprocal_rank(results, truth)?,
        per_bug,
        groups: BTreeMap::new(),
    })
}

/// Project of a bug id: the part before the last `-` (`Time-25` → `Time`).
pub fn project_of(bug_id: &str) -> &str {
    bug_id.rsplit_once('-').map_or(bug_id, |(p, _)| p)
}

/// Like [`evaluate`], with an additional report per project.
pub fn evaluate_grouped(
    results: &BTreeMap<String, RankedList>,
    truth: &Truth,
    ns: &[usize],
) -> Result<EvalReport, EvalError> {
    let mut report = evaluate(results, truth, ns)?;
    let projects: BTreeSet<&str> = truth.keys().map(|b| project_of(b)).collect();
    for p in projects {
        let t: Truth = truth
            .iter()
            .filter(|(b, _)| project_of(b) == p)
            .map(|(b, m)| (b.clone(), m.clone()))
            .collect();
        let r: BTreeMap<String, RankedList> = results
            .iter()
            .filter(|(b, _)| t.contains_key(*b))
            .map(|(b, l)| (b.clone(), l.clone()))
            .collect();
        report.groups.insert(p.to_string(), evaluate(&r, &t, ns)?);
    }
    Ok(report)
}

/// Aligned plain-text table of the summary metrics (one row per group).
pub fn render_table(report: &EvalReport) -> String {
    let mut rows = vec![("all".to_string(), report)];
    rows.extend(report.groups.iter().map(|(g, r)| (g.clone(), r)));
    let mut header = vec!["set".to_string(), "bugs".to_string()];
    header.extend(report.top_n.keys().map(|n| format!("top-{n}")));
    header.push("MAP".into());
    header.push("MRR".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            let mut cells = vec![name.clone(), r.bugs.to_string()];
            cells.extend(r.top_n.values().map(usize::to_string));
            cells.push(format!("{:.4}", r.map));
            cells.push(format!("{:.4}", r.mrr));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&header);
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in &body {
        out.push('\n');
        out.push_str(&line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth(entries: &[(&str, &[&str])]) -> Truth {
        entries
            .iter()
            .map(|(b, m)| (b.to_string(), m.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    fn results(entries: &[(&str, &[&str])]) -> BTreeMap<String, RankedList> {
        entries
            .iter()
            .map(|(b, l)| (b.to_string(), RankedList::from_fqns("t", l.iter().copied())))
            .collect()
    }

    #[test]
    fn hand_cases() {
        let t = truth(&[("B-1", &["x", "y"])]);
        let r = results(&[("B-1", &["x", "a", "y"])]);
        assert_eq!(mean_average_precision(&r, &t).unwrap(), 5.0 / 6.0);

        let t = truth(&[("B-1", &["x"])]);
        let r4 = results(&[("B-1", &["a", "b", "c", "x"])]);
        assert_eq!(top_n(&r4, &t, 3).unwrap(), 0);
        assert_eq!(top_n(&r4, &t, 5).unwrap(), 1);
        let r2 = results(&[("B-1", &["a", "x"])]);
        assert_eq!(mean_reciprocal_rank(&r2, &t).unwrap(), 0.5);

        let t2 = truth(&[("A-1", &["x"]), ("A-2", &["y"])]);
        let r = results(&[("A-1", &["x"]), ("A-2", &["a", "b", "c", "y"])]);
        assert_eq!(mean_reciprocal_rank(&r, &t2).unwrap(), 0.625);
    }

    #[test]
    fn small_averages_are_exact() {
        let buggy = ["a", "b"].map(String::from).into_iter().collect();
        assert_eq!(
            average_precision(&RankedList::from_fqns("t", ["a", "x", "b"]), &buggy),
            5.0 / 6.0
        );
        let long: Vec<String> = (0..400).map(|i| format!("m{i}")).collect();
        let buggy: BTreeSet<String> = long.iter().step_by(7).cloned().collect();
        let ap = average_precision(&RankedList::from_fqns("t", long.clone()), &buggy);
        assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn perfect_and_empty_rankings() {
        let t = truth(&[("B-1", &["x", "y"])]);
        assert_eq!(
            mean_average_precision(&results(&[("B-1", &["y", "x", "z"])]), &t).unwrap(),
            1.0
        );
        assert_eq!(mean_average_precision(&results(&[("B-1", &["z"])]), &t).unwrap(), 0.0);
        assert_eq!(mean_reciprocal_rank(&results(&[("B-1", &[])]), &t).unwrap(), 0.0);
    }

    #[test]
    fn unknown_bugs_are_errors_and_missing_ones_count_as_zero() {
        let t = truth(&[("B-1", &["x"]), ("B-2", &["y"])]);
        assert!(matches!(
            top_n(&results(&[("C-9", &["x"])]), &t, 1),
            Err(EvalError::UnknownBug(_))
        ));
        let r = results(&[("B-1", &["x"])]);
        assert_eq!(mean_reciprocal_rank(&r, &t).unwrap(), 0.5);
        let report = evaluate(&r, &t, &DEFAULT_TOP_N).unwrap();
        assert!(!report.per_bug["B-2"].ranked);
    }

    #[test]
    fn truth_file_format() {
        let t = parse_truth("{\"bug_id\":\"Time-25\",\"buggy_methods\":[\"a.B.c()\"]}\n\n", "t").unwrap();
        assert_eq!(t["Time-25"].len(), 1);
        assert!(parse_truth("{\"bug_id\":\"x\",\"buggy_methods\":[]}", "t").is_err());
        let dup = "{\"bug_id\":\"x\",\"buggy_methods\":[\"a\"]}\n{\"bug_id\":\"x\",\"buggy_methods\":[\"b\"]}";
        assert!(parse_truth(dup, "t").unwrap_err().to_string().contains("twice"));
    }

    #[test]
    fn grouping_and_table() {
        let t = truth(&[("Time-1", &["x"]), ("Lang-2", &["y"]), ("Lang-3", &["z"])]);
        let r = results(&[("Time-1", &["x"]), ("Lang-2", &["a", "y"])]);
        let report = evaluate_grouped(&r, &t, &DEFAULT_TOP_N).unwrap();
        assert_eq!(report.groups["Lang"].bugs, 2);
        assert_eq!(report.groups["Time"].top_n[&1], 1);
        let table = render_table(&report);
        assert_eq!(table.lines().count(), 5);
        assert!(table.lines().next().unwrap().starts_with("set"));
        assert_eq!(project_of("Closure-12"), "Closure");
        assert_eq!(project_of("plain"), "plain");
    }

    fn instance() -> impl Strategy<Value = (Vec<String>, BTreeSet<String>, usize, usize)> {
        (
            proptest::collection::btree_set(0u8..30, 0..15),
            proptest::collection::btree_set(0u8..30, 1..4),
            0usize..10,
            0usize..15,
        )
            .prop_map(|(l, b, extra, swap)| {
                (
                    l.into_iter().map(|i| format!("m{i}")).collect(),
                    b.into_iter().map(|i| format!("m{i}")).collect(),
                    extra,
                    swap,
                )
            })
    }

    proptest! {
        #[test]
        fn appending_non_buggy_entries_keeps_top_n_and_mrr((list, buggy, extra, _) in instance()) {
            let t: Truth = [("B-1".to_string(), buggy.clone())].into();
            let base: BTreeMap<_, _> = [("B-1".to_string(), RankedList::from_fqns("t", list.clone()))].into();
            let mut longer = list.clone();
            longer.extend((0..extra).map(|i| format!("filler{i}")));
            let ext: BTreeMap<_, _> = [("B-1".to_string(), RankedList::from_fqns("t", longer))].into();
            for n in 1..=list.len().max(1) {
                prop_assert_eq!(top_n(&base, &t, n).unwrap(), top_n(&ext, &t, n).unwrap());
            }
            prop_assert_eq!(mean_reciprocal_rank(&base, &t).unwrap(), mean_reciprocal_rank(&ext, &t).unwrap());
        }

        #[test]
        fn swapping_non_buggy_entries_changes_nothing((list, buggy, _, swap) in instance()) {
            let free: Vec<usize> = (0..list.len()).filter(|&i| !buggy.contains(&list[i])).collect();
            prop_assume!(free.len() >= 2);
            let (i, j) = (free[swap % free.len()], free[(swap + 1) % free.len()]);
            let mut swapped = list.clone();
            swapped.swap(i, j);
            let t: Truth = [("B-1".to_string(), buggy)].into();
            let a: BTreeMap<_, _> = [("B-1".to_string(), RankedList::from_fqns("t", list))].into();
            let b: BTreeMap<_, _> = [("B-1".to_string(), RankedList::from_fqns("t", swapped))].into();
            prop_assert_eq!(evaluate(&a, &t, &DEFAULT_TOP_N).unwrap().map, evaluate(&b, &t, &DEFAULT_TOP_N).unwrap().map);
            prop_assert_eq!(evaluate(&a, &t, &DEFAULT_TOP_N).unwrap().mrr, evaluate(&b, &t, &DEFAULT_TOP_N).unwrap().mrr);
            prop_assert_eq!(evaluate(&a, &t, &DEFAULT_TOP_N).unwrap().top_n, evaluate(&b, &t, &DEFAULT_TOP_N).unwrap().top_n);
        }
    }
}
