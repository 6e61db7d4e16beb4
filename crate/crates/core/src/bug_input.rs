//! Textual bug inputs: formatted bug reports and preprocessed trigger tests.
//!
//! Trigger tests are shortened before they reach a model. Stack frames from
//! outside the buggy program (JUnit, the JDK) are dropped, and the test
//! method is cut at the line that failed.

use crate::index::{JavaExtractor, RepoIndex, SourceExtractor};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Sentence separating the truncated test from its stack trace.
pub const FAILURE_SENTENCE: &str = "The last line shown above failed with the following stack trace.";
const UNTRUNCATED_SENTENCE: &str = "The test above failed with the following stack trace.";

#[derive(Debug, Error)]
pub enum BugInputError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid bug-info file {path}: {message}")]
    Schema { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub title: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackFrame {
    pub fqn: String,
    #[serde(default)]
    pub file: String,
    pub line: usize,
    /// Extra text printed before the frame, e.g. a `Caused by:` line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerTest {
    /// Source of the test method.
    #[serde(rename = "source")]
    pub test_source: String,
    /// Line of the test's file on which `source` begins. Needed to map the
    /// failing frame into the snippet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_line: Option<usize>,
    /// Innermost frame first.
    pub stack_trace: Vec<StackFrame>,
    #[serde(default)]
    pub exception_message: String,
}

/// Bug-related information available for one bug.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BugInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bug_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<BugReport>,
    #[serde(default)]
    pub trigger_tests: Vec<TriggerTest>,
    /// Package prefixes owned by the buggy program.
    #[serde(default, rename = "project_prefixes")]
    pub project_fqn_prefixes: Vec<String>,
}

impl BugInfo {
    pub fn has_report(&self) -> bool {
        self.report.is_some()
    }

    pub fn has_trigger_tests(&self) -> bool {
        !self.trigger_tests.is_empty()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.has_report() && !self.has_trigger_tests() {
            return Err("at least one of `report` or `trigger_tests` must be present".into());
        }
        if let Some(r) = &self.report {
            if r.title.trim().is_empty() && r.description.trim().is_empty() {
                return Err("`report` has neither title nor description".into());
            }
        }
        for (i, t) in self.trigger_tests.iter().enumerate() {
            if t.test_source.trim().is_empty() {
                return Err(format!("`trigger_tests[{i}].source` is empty"));
            }
            if t.stack_trace.is_empty() {
                return Err(format!("`trigger_tests[{i}].stack_trace` is empty"));
            }
        }
        Ok(())
    }

    /// Explicit prefixes, or the package set of `index` when none were given.
    pub fn effective_prefixes(&self, index: &RepoIndex) -> Vec<String> {
        if !self.project_fqn_prefixes.is_empty() {
            return self.project_fqn_prefixes.clone();
        }
        index.paths().iter().filter(|p| !p.is_empty()).cloned().collect()
    }
}

pub fn load_bug_info(path: &Path) -> Result<BugInfo, BugInputError> {
    let text = std::fs::read_to_string(path).map_err(|source| BugInputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_bug_info(&text).map_err(|message| BugInputError::Schema {
        path: path.display().to_string(),
        message,
    })
}

pub fn parse_bug_info(text: &str) -> Result<BugInfo, String> {
    let info: BugInfo = serde_json::from_str(text).map_err(|e| e.to_string())?;
    info.validate()?;
    Ok(info)
}

/// `Title: <title>\nDescription: <description>`.
pub fn render_report(report: &BugReport) -> String {
    format!("Title: {}\nDescription: {}", report.title, report.description)
}

fn frame_line(f: &StackFrame) -> String {
    format!("at {}({}:{})", f.fqn, f.file, f.line)
}

fn belongs_to(fqn: &str, prefixes: &[String]) -> bool {
    prefixes.iter().any(|p| {
        let p = p.trim_end_matches('.');
        fqn == p || (fqn.starts_with(p) && fqn.as_bytes().get(p.len()) == Some(&b'.'))
    })
}

/// Frames whose FQN lies under one of `prefixes`, in their original order.
pub fn filter_frames<'a>(frames: &'a [StackFrame], prefixes: &[String]) -> Vec<&'a StackFrame> {
    frames.iter().filter(|f| belongs_to(&f.fqn, prefixes)).collect()
}

/// Name of the test method declared in `source`.
pub fn test_method_name(source: &str) -> Option<String> {
    let wrapped = format!("class __TriggerTest {{\n{source}\n}}");
    if let Ok(outline) = JavaExtractor.extract(&wrapped) {
        if let Some(m) = outline.methods.first() {
            return Some(m.name.clone());
        }
    }
    let re = regex::Regex::new(r"([A-Za-z_$][\w$]*)\s*\(").expect("valid regex");
    source
        .lines()
        .filter(|l| !l.trim_start().starts_with('@'))
        .find_map(|l| re.captures(l).map(|c| c[1].to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessedTest {
    pub text: String,
    /// Number of source lines kept, when the test was truncated.
    pub kept_lines: Option<usize>,
    pub warnings: Vec<String>,
}

/// Filter the stack trace, truncate the test after its failing line and
/// render both.
pub fn preprocess_trigger_test(test: &TriggerTest, prefixes: &[String]) -> PreprocessedTest {
    let mut warnings = Vec::new();
    let retained = filter_frames(&test.stack_trace, prefixes);
    let lines: Vec<&str> = test.test_source.lines().collect();

    let name = test_method_name(&test.test_source);
    let failing = name
        .as_deref()
        .and_then(|n| retained.iter().find(|f| f.fqn.rsplit('.').next() == Some(n)).copied());
    let kept_lines = match (failing, test.start_line) {
        (Some(frame), Some(start)) if frame.line >= start && frame.line - start < lines.len() => {
            Some(frame.line - start + 1)
        }
        (Some(frame), Some(start)) => {
            warnings.push(format!(
                "failing line {} lies outside the test source (lines {start}..{}); keeping the whole test",
                frame.line,
                start + lines.len().saturating_sub(1)
            ));
            None
        }
        (Some(_), None) => {
            warnings.push("test source has no start_line; keeping the whole test".into());
            None
        }
        (None, _) => {
            warnings.push("no retained stack frame lies inside the test method; keeping the whole test".into());
            None
        }
    };

    let mut text = match kept_lines {
        Some(n) => lines[..n].join("\n"),
        None => test.test_source.trim_end().to_string(),
    };
    text.push('\n');
    text.push_str(if kept_lines.is_some() {
        FAILURE_SENTENCE
    } else {
        UNTRUNCATED_SENTENCE
    });
    render_trace(&mut text, &test.exception_message, retained.iter().copied());
    PreprocessedTest {
        text,
        kept_lines,
        warnings,
    }
}

fn render_trace<'a>(out: &mut String, message: &str, frames: impl Iterator<Item = &'a StackFrame>) {
    if !message.is_empty() {
        out.push('\n');
        out.push_str(message);
    }
    for f in frames {
        if let Some(m) = &f.message {
            out.push('\n');
            out.push_str(m);
        }
        out.push('\n');
        out.push_str(&frame_line(f));
    }
}

/// The test rendered without filtering or truncation.
pub fn render_trigger_test_raw(test: &TriggerTest) -> String {
    let mut text = test.test_source.trim_end().to_string();
    text.push('\n');
    text.push_str(FAILURE_SENTENCE);
    render_trace(&mut text, &test.exception_message, test.stack_trace.iter());
    text
}

/// All trigger tests, each preprocessed, separated by blank lines.
pub fn render_trigger_tests(tests: &[TriggerTest], prefixes: &[String]) -> (String, Vec<String>) {
    let mut warnings = Vec::new();
    let parts: Vec<String> = tests
        .iter()
        .map(|t| {
            let p = preprocess_trigger_test(t, prefixes);
            warnings.extend(p.warnings);
            p.text
        })
        .collect();
    (parts.join("\n\n"), warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn time25_test() -> TriggerTest {
        TriggerTest {
            test_source: "    public void test_DateTime_constructor_Moscow_Autumn() {\n        DateTime dt = new DateTime(2007, 10, 28, 2, 30, ZONE_MOSCOW);\n        assertEquals(\"2007-10-28T02:30:00.000+04:00\", dt.toString());\n        DateTime later = dt.plusHours(1);\n        assertEquals(\"2007-10-28T02:30:00.000+03:00\", later.toString());\n    }".into(),
            start_line: Some(920),
            stack_trace: vec![
                StackFrame {
                    fqn: "junit.framework.Assert.assertEquals".into(),
                    file: "Assert.java".into(),
                    line: 100,
                    message: None,
                },
                StackFrame {
                    fqn: "org.joda.time.TestDateTimeZoneCutover.test_DateTime_constructor_Moscow_Autumn".into(),
                    file: "TestDateTimeZoneCutover.java".into(),
                    line: 922,
                    message: None,
                },
            ],
            exception_message: "junit.framework.ComparisonFailure: expected:<...10-28T02:30:00.000+0[4]:00> but was:<...10-28T02:30:00.000+0[3]:00>".into(),
        }
    }

    #[test]
    fn report_rendering() {
        let r = BugReport {
            title: "#90 DateTimeZone.getOffsetFromLocal error during DST transition".into(),
            description: "d".into(),
        };
        assert!(render_report(&r)
            .starts_with("Title: #90 DateTimeZone.getOffsetFromLocal error during DST transition\nDescription: "));
        let empty = BugReport {
            title: "t".into(),
            description: String::new(),
        };
        assert_eq!(render_report(&empty), "Title: t\nDescription: ");
    }

    #[test]
    fn time25_trigger_test_is_filtered_and_truncated() {
        let p = preprocess_trigger_test(&time25_test(), &["org.joda.time".to_string()]);
        assert!(p.warnings.is_empty(), "{:?}", p.warnings);
        assert_eq!(p.kept_lines, Some(3));
        assert!(!p.text.contains("junit.framework.Assert.assertEquals"));
        assert!(p.text.contains("junit.framework.ComparisonFailure"));
        let lines: Vec<&str> = p.text.lines().collect();
        assert!(lines[2].contains("assertEquals(\"2007-10-28T02:30:00.000+04:00\""));
        assert_eq!(lines[3], FAILURE_SENTENCE);
        assert_eq!(
            lines.last().unwrap(),
            &"at org.joda.time.TestDateTimeZoneCutover.test_DateTime_constructor_Moscow_Autumn(TestDateTimeZoneCutover.java:922)"
        );
    }

    #[test]
    fn in_project_trace_keeps_every_frame() {
        let mut t = time25_test();
        t.stack_trace.remove(0);
        let p = preprocess_trigger_test(&t, &["org.joda.time".to_string()]);
        assert_eq!(p.text.matches("\nat ").count(), 1);
    }

    #[test]
    fn no_frame_in_test_keeps_whole_source() {
        let p = preprocess_trigger_test(&time25_test(), &["junit".to_string()]);
        assert_eq!(p.kept_lines, None);
        assert_eq!(p.warnings.len(), 1);
        assert!(p.text.contains("later.toString()"));
    }

    #[test]
    fn prefix_boundaries() {
        assert!(belongs_to("org.joda.time.X.y", &["org.joda.time".into()]));
        assert!(!belongs_to("org.joda.timex.X.y", &["org.joda.time".into()]));
    }

    #[test]
    fn bug_info_schema() {
        let only_report = parse_bug_info(r#"{"report": {"title": "t", "description": "d"}}"#).unwrap();
        assert!(only_report.trigger_tests.is_empty());
        let neither = parse_bug_info(r#"{"project_prefixes": ["a"]}"#).unwrap_err();
        assert!(neither.contains("report") && neither.contains("trigger_tests"));
        let missing = parse_bug_info(r#"{"trigger_tests": [{"stack_trace": []}]}"#).unwrap_err();
        assert!(missing.contains("source"), "{missing}");
    }

    fn frame_strategy() -> impl Strategy<Value = StackFrame> {
        (
            "(org\\.p|junit\\.f|java\\.lang)\\.[A-Z][a-z]{1,4}\\.[a-z]{1,5}",
            1usize..500,
        )
            .prop_map(|(fqn, line)| StackFrame {
                fqn,
                file: "F.java".into(),
                line,
                message: None,
            })
    }

    proptest! {
        #[test]
        fn filtering_preserves_order(frames in proptest::collection::vec(frame_strategy(), 0..12)) {
            let kept = filter_frames(&frames, &["org.p".to_string()]);
            let mut last = 0usize;
            for k in kept {
                let pos = frames.iter().position(|f| std::ptr::eq(f, k)).unwrap();
                prop_assert!(pos >= last);
                last = pos;
            }
        }

        #[test]
        fn preprocessing_never_grows(frames in proptest::collection::vec(frame_strategy(), 1..8), start in 1usize..400, body in 1usize..8) {
            let mut src = String::from("void testIt() {\n");
            for i in 0..body { src.push_str(&format!("  check({i});\n")); }
            src.push('}');
            let t = TriggerTest { test_source: src, start_line: Some(start), stack_trace: frames, exception_message: "E".into() };
            let p = preprocess_trigger_test(&t, &["org.p".to_string()]);
            prop_assert!(p.text.len() <= render_trigger_test_raw(&t).len());
        }

        #[test]
        fn report_rendering_is_injective(t1 in "[^\n]{0,20}", d1 in ".{0,20}", t2 in "[^\n]{0,20}", d2 in ".{0,20}") {
            let a = render_report(&BugReport { title: t1.clone(), description: d1.clone() });
            let b = render_report(&BugReport { title: t2.clone(), description: d2.clone() });
            prop_assert_eq!(a == b, t1 == t2 && d1 == d2);
        }
    }
}
