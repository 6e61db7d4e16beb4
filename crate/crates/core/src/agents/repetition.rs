use crate::ranking::RankedList;
use std::collections::BTreeMap;

/// Prediction lists from `R` independent runs of one agent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RepetitionRun {
    pub runs: Vec<Vec<String>>,
}

impl RepetitionRun {
    pub fn from_lists<'a>(lists: impl IntoIterator<Item = &'a RankedList>) -> Self {
        RepetitionRun {
            runs: lists
                .into_iter()
                .map(|l| l.fqns().map(str::to_string).collect())
                .collect(),
        }
    }
}

/// Score each method by `(1/R) Σ_i [m ∈ r_i] / (|r_i| · rank_i(m))` and
/// sort descending, ties by name. Methods in no run are absent.
pub fn aggregate_repetitions(run: &RepetitionRun, technique: &str) -> RankedList {
    let r = run.runs.len();
    if r == 0 {
        return RankedList::new(technique);
    }
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for list in &run.runs {
        let len = list.len() as f64;
        let mut seen = std::collections::HashSet::new();
        for (i, m) in list.iter().enumerate() {
            if seen.insert(m.as_str()) {
                *scores.entry(m).or_insert(0.0) += 1.0 / (len * (i + 1) as f64);
            }
        }
    }
    let scored = scores.into_iter().map(|(m, s)| (m.to_string(), s / r as f64)).collect();
    RankedList::from_scores(technique, scored)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lists: &[&[&str]]) -> RepetitionRun {
        RepetitionRun {
            runs: lists
                .iter()
                .map(|l| l.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }

    #[test]
    fn worked_cases() {
        let one = aggregate_repetitions(&run(&[&["A"]]), "t");
        assert_eq!(one.entries[0].score, 1.0);

        let two = aggregate_repetitions(&run(&[&["A", "B"], &["B"]]), "t");
        assert_eq!(two.fqns().collect::<Vec<_>>(), vec!["B", "A"]);
        assert!((two.entries[0].score - 0.625).abs() < 1e-12);
        assert!((two.entries[1].score - 0.25).abs() < 1e-12);
        assert!(!two.contains("C"));
    }

    #[test]
    fn duplicating_all_runs_changes_nothing() {
        let base = run(&[&["A", "B", "C"], &["C", "A"], &[]]);
        let mut doubled = base.clone();
        doubled.runs.extend(base.runs.clone());
        let a = aggregate_repetitions(&base, "t");
        let b = aggregate_repetitions(&doubled, "t");
        assert_eq!(a.fqns().collect::<Vec<_>>(), b.fqns().collect::<Vec<_>>());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert!((x.score - y.score).abs() < 1e-12);
        }
    }
}
