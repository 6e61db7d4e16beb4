use super::{read_file, BaselineError};
use crate::index::RepoIndex;
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestOutcome {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveredTest {
    pub id: String,
    pub outcome: TestOutcome,
    pub covered: BTreeSet<String>,
}

/// Per-test method coverage with pass/fail outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoverageSpectrum {
    pub tests: Vec<CoveredTest>,
}

/// Failing/passing tests that do (`ef`, `ep`) or do not (`nf`, `np`) cover a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpectrumCounts {
    pub ef: usize,
    pub ep: usize,
    pub nf: usize,
    pub np: usize,
}

impl CoverageSpectrum {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        CoverageSpectrum::from_json(&read_file(path)?).map_err(|message| BaselineError::Format {
            path: path.display().to_string(),
            message,
        })
    }

    pub fn failing(&self) -> usize {
        self.tests.iter().filter(|t| t.outcome == TestOutcome::Fail).count()
    }

    /// Drop covered FQNs unknown to `index`; one warning per dropped name.
    pub fn resolve(&self, index: &RepoIndex) -> (CoverageSpectrum, Vec<String>) {
        let mut unknown = BTreeSet::new();
        let tests = self
            .tests
            .iter()
            .map(|t| CoveredTest {
                covered: t
                    .covered
                    .iter()
                    .filter(|f| {
                        let known = index.method(f).is_some();
                        if !known {
                            unknown.insert((*f).clone());
                        }
                        known
                    })
                    .cloned()
                    .collect(),
                ..t.clone()
            })
            .collect();
        let warnings = unknown
            .into_iter()
            .map(|f| format!("coverage names unknown method {f}; dropped"))
            .collect();
        (CoverageSpectrum { tests }, warnings)
    }

    /// Counts for every method covered by at least one test.
    pub fn counts(&self) -> BTreeMap<String, SpectrumCounts> {
        let total_fail = self.failing();
        let total_pass = self.tests.len() - total_fail;
        let mut counts: BTreeMap<String, SpectrumCounts> = BTreeMap::new();
        for t in &self.tests {
            for m in &t.covered {
                let c = counts.entry(m.clone()).or_default();
                match t.outcome {
                    TestOutcome::Fail => c.ef += 1,
                    TestOutcome::Pass => c.ep += 1,
                }
            }
        }
        for c in counts.values_mut() {
            c.nf = total_fail - c.ef;
            c.np = total_pass - c.ep;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Ochiai,
    DStar2,
    Tarantula,
}

impl Formula {
    pub fn label(self) -> &'static str {
        match self {
            Formula::Ochiai => "ochiai",
            Formula::DStar2 => "dstar2",
            Formula::Tarantula => "tarantula",
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ochiai" => Ok(Formula::Ochiai),
            "dstar2" | "dstar" => Ok(Formula::DStar2),
            "tarantula" => Ok(Formula::Tarantula),
            other => Err(format!(
                "unknown SBFL formula `{other}` (expected ochiai, dstar2 or tarantula)"
            )),
        }
    }
}

/// Suspiciousness of one method. Methods no failing test covers score 0;
/// DStar2 with `ep + nf = 0` is `+inf`.
pub fn formula_score(formula: Formula, c: SpectrumCounts) -> f64 {
    if c.ef == 0 {
        return 0.0;
    }
    let (ef, ep, nf, np) = (c.ef as f64, c.ep as f64, c.nf as f64, c.np as f64);
    match formula {
        Formula::Ochiai => ef / ((ef + nf) * (ef + ep)).sqrt(),
        Formula::DStar2 if ep + nf == 0.0 => f64::INFINITY,
        Formula::DStar2 => ef * ef / (ep + nf),
        Formula::Tarantula => {
            let fail = ef / (ef + nf);
            let pass = if ep + np == 0.0 { 0.0 } else { ep / (ep + np) };
            fail / (fail + pass)
        }
    }
}

pub fn sbfl_score(spectrum: &CoverageSpectrum, formula: Formula) -> Result<RankedList, BaselineError> {
    if spectrum.failing() == 0 {
        return Err(BaselineError::Precondition(
            "the coverage spectrum has no failing test".into(),
        ));
    }
    let scored = spectrum
        .counts()
        .into_iter()
        .map(|(m, c)| (m, formula_score(formula, c)))
        .collect();
    Ok(RankedList::from_scores(formula.label(), scored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test(id: &str, outcome: TestOutcome, covered: &[&str]) -> CoveredTest {
        CoveredTest {
            id: id.into(),
            outcome,
            covered: covered.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn two_by_two() -> CoverageSpectrum {
        CoverageSpectrum {
            tests: vec![
                test("t1", TestOutcome::Fail, &["m1", "m2"]),
                test("t2", TestOutcome::Pass, &["m2"]),
            ],
        }
    }

    #[test]
    fn hand_computed_values() {
        let s = two_by_two();
        let o = sbfl_score(&s, Formula::Ochiai).unwrap();
        assert_eq!(o.entries[0].fqn, "m1");
        assert!((o.entries[0].score - 1.0).abs() < 1e-12);
        assert!((o.entries[1].score - 1.0 / 2f64.sqrt()).abs() < 1e-12);

        let d = sbfl_score(&s, Formula::DStar2).unwrap();
        assert_eq!(d.entries[0].score, f64::INFINITY);
        assert!((d.entries[1].score - 1.0).abs() < 1e-12);

        let t = sbfl_score(&s, Formula::Tarantula).unwrap();
        assert!((t.entries[0].score - 1.0).abs() < 1e-12);
        assert!((t.entries[1].score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn passing_only_coverage_scores_zero() {
        let s = CoverageSpectrum {
            tests: vec![
                test("f", TestOutcome::Fail, &["a"]),
                test("p", TestOutcome::Pass, &["b"]),
            ],
        };
        for f in [Formula::Ochiai, Formula::DStar2, Formula::Tarantula] {
            let l = sbfl_score(&s, f).unwrap();
            assert_eq!(l.entries[1].fqn, "b");
            assert_eq!(l.entries[1].score, 0.0);
        }
    }

    #[test]
    fn no_failing_test_is_a_precondition_error() {
        let s = CoverageSpectrum {
            tests: vec![test("p", TestOutcome::Pass, &["a"])],
        };
        assert!(matches!(
            sbfl_score(&s, Formula::Ochiai),
            Err(BaselineError::Precondition(_))
        ));
    }

    #[test]
    fn spectrum_file_format() {
        let s =
            CoverageSpectrum::from_json(r#"{"tests": [{"id": "t", "outcome": "fail", "covered": ["a"]}]}"#).unwrap();
        assert_eq!(s.failing(), 1);
        assert!(CoverageSpectrum::from_json(r#"{"tests": [{"id": "t", "outcome": "skip", "covered": []}]}"#).is_err());
    }

    fn spectrum_strategy() -> impl Strategy<Value = CoverageSpectrum> {
        proptest::collection::vec((any::<bool>(), proptest::collection::btree_set(0usize..6, 0..6)), 1..8).prop_map(
            |rows| CoverageSpectrum {
                tests: rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (fail, cov))| CoveredTest {
                        id: format!("t{i}"),
                        outcome: if fail { TestOutcome::Fail } else { TestOutcome::Pass },
                        covered: cov.into_iter().map(|m| format!("m{m}")).collect(),
                    })
                    .collect(),
            },
        )
    }

    proptest! {
        #[test]
        fn ranking_is_invariant_under_test_reordering(s in spectrum_strategy(), seed in any::<u64>()) {
            prop_assume!(s.failing() > 0);
            let mut shuffled = s.clone();
            let n = shuffled.tests.len();
            for i in (1..n).rev() {
                let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
                shuffled.tests.swap(i, j);
            }
            for f in [Formula::Ochiai, Formula::DStar2, Formula::Tarantula] {
                prop_assert_eq!(sbfl_score(&s, f).unwrap(), sbfl_score(&shuffled, f).unwrap());
            }
        }
    }
}
