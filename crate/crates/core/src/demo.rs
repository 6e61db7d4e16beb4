//! Bundled Time-25 walkthrough: a trimmed Joda-Time repository, the bug
//! inputs, precomputed baseline lists and scripted agent replies.
//!
//! ```
//! let run = flexloc::demo::run().unwrap();
//! assert_eq!(run.output.final_list().entries[0].fqn, flexloc::demo::BUGGY_METHOD);
//! ```

use crate::agents::{run_flexfl, AgentError, AgentTranscript, FlexFlConfig, FlexFlOutput};
use crate::baseline::{lift_statement_ranks, parse_statements};
use crate::bug_input::{parse_bug_info, BugInfo};
use crate::eval::{evaluate, parse_truth, EvalReport, DEFAULT_TOP_N};
use crate::index::{index_sources, JavaExtractor, RepoIndex};
use crate::llm::{Gateway, ReplayBackend};
use crate::ranking::RankedList;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const BUG_ID: &str = "Time-25";
pub const BUGGY_METHOD: &str = "org.joda.time.DateTimeZone.getOffsetFromLocal(long)";

macro_rules! fixture {
    ($p:literal) => {
        include_str!(concat!("../fixtures/time25/", $p))
    };
}

macro_rules! java {
    ($($p:literal),* $(,)?) => {
        [$(($p, include_str!(concat!("../fixtures/time25/repo/", $p)))),*]
    };
}

/// Repository sources as `(relative path, text)`.
pub const SOURCES: [(&str, &str); 9] = java!(
    "org/joda/time/DateTime.java",
    "org/joda/time/DateTimeZone.java",
    "org/joda/time/base/BaseDateTime.java",
    "org/joda/time/chrono/ZonedChronology.java",
    "org/joda/time/format/DateTimeFormatter.java",
    "org/joda/time/tz/CachedDateTimeZone.java",
    "org/joda/time/tz/DateTimeZoneBuilder.java",
    "org/joda/time/tz/DefaultNameProvider.java",
    "org/joda/time/tz/FixedDateTimeZone.java",
);

/// Non-source fixture files as `(name, text)`.
pub const FILES: [(&str, &str); 7] = [
    ("bug.json", fixture!("bug.json")),
    ("sbir.statements.jsonl", fixture!("sbir.statements.jsonl")),
    ("ochiai.jsonl", fixture!("ochiai.jsonl")),
    ("boostn.jsonl", fixture!("boostn.jsonl")),
    ("truth.jsonl", fixture!("truth.jsonl")),
    ("sr.replay.json", fixture!("sr.replay.json")),
    ("lr.replay.json", fixture!("lr.replay.json")),
];

fn file(name: &str) -> &'static str {
    FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .expect("bundled fixture")
}

/// Parsed demo inputs.
pub struct DemoInputs {
    pub index: RepoIndex,
    pub bug: BugInfo,
    /// Precomputed baseline lists by technique.
    pub external: BTreeMap<String, RankedList>,
    pub sr_script: ReplayBackend,
    pub lr_script: ReplayBackend,
}

pub fn inputs() -> DemoInputs {
    let index = index_sources(SOURCES, &JavaExtractor).index;
    let bug = parse_bug_info(file("bug.json")).expect("bundled bug");
    let statements =
        parse_statements(file("sbir.statements.jsonl"), "sbir.statements.jsonl").expect("bundled statements");
    let mut external = BTreeMap::new();
    external.insert("sbir".to_string(), lift_statement_ranks(&statements, &index, "sbir"));
    for t in ["ochiai", "boostn"] {
        let name = format!("{t}.jsonl");
        let list = RankedList::from_jsonl(file(&name), Some(t), &name).expect("bundled list");
        external.insert(t.to_string(), list);
    }
    DemoInputs {
        index,
        bug,
        external,
        sr_script: ReplayBackend::from_json("sr.replay.json", file("sr.replay.json")).expect("bundled script"),
        lr_script: ReplayBackend::from_json("lr.replay.json", file("lr.replay.json")).expect("bundled script"),
    }
}

pub struct DemoRun {
    pub output: FlexFlOutput,
    pub report: EvalReport,
}

/// Run both stages on the bundled inputs with the default configuration.
pub fn run() -> Result<DemoRun, AgentError> {
    let d = inputs();
    let sr = Gateway::new(d.sr_script);
    let lr = Gateway::new(d.lr_script);
    let output = run_flexfl(&d.bug, &d.index, None, &d.external, &sr, &lr, &FlexFlConfig::default())?;
    let truth = parse_truth(file("truth.jsonl"), "truth.jsonl").expect("bundled truth");
    let results = [(BUG_ID.to_string(), output.final_list().clone())].into();
    let report = evaluate(&results, &truth, &DEFAULT_TOP_N).expect("demo bug has ground truth");
    Ok(DemoRun { output, report })
}

/// Write the bundled repository and input files below `dir`.
pub fn export(dir: &Path) -> std::io::Result<()> {
    for (rel, text) in SOURCES {
        let p = dir.join("repo").join(rel);
        std::fs::create_dir_all(p.parent().expect("nested path"))?;
        std::fs::write(p, text)?;
    }
    for (name, text) in FILES {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn list_lines(out: &mut String, list: &RankedList, mark: &str, limit: usize) {
    for e in list.entries.iter().take(limit) {
        let flag = if e.fqn == mark { "  <== buggy" } else { "" };
        let _ = writeln!(out, "  {:>2}. {}{flag}", e.rank, e.fqn);
    }
}

fn agent_lines(out: &mut String, t: &AgentTranscript) {
    for c in &t.calls {
        let call = c.call.as_ref().map_or_else(|| c.response.clone(), |c| c.to_string());
        let _ = writeln!(out, "  > {call}");
        if let Some(first) = c.result.text.lines().find(|l| !l.trim().is_empty()) {
            let _ = writeln!(out, "      {}", first.trim());
        }
    }
    let _ = writeln!(out, "  summary as written:");
    for (i, n) in t.summary_names.iter().enumerate() {
        let _ = writeln!(out, "    Top_{}: {n}", i + 1);
    }
}

/// Human-readable account of a demo run.
pub fn walkthrough(run: &DemoRun) -> String {
    let o = &run.output;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Bug {BUG_ID}: wrong offset for an ambiguous local time at a DST overlap.\n"
    );
    let _ = writeln!(out, "Stage 1: space reduction");
    for (t, l) in &o.stage1.lists {
        let _ = writeln!(out, "{t}: {} method(s)", l.len());
    }
    for t in &o.stage1.sr_runs {
        let _ = writeln!(out, "\nSearch agent ({} calls):", t.calls.len());
        agent_lines(&mut out, t);
        let _ = writeln!(out, "  repaired predictions:");
        list_lines(&mut out, &t.predictions, BUGGY_METHOD, usize::MAX);
    }
    let _ = writeln!(out, "\nFused candidates ({}):", o.stage1.candidates.len());
    list_lines(&mut out, &o.stage1.candidates, BUGGY_METHOD, usize::MAX);

    let _ = writeln!(out, "\nStage 2: localization refinement");
    for t in &o.stage2.lr_runs {
        let _ = writeln!(out, "Refinement agent ({} calls):", t.calls.len());
        agent_lines(&mut out, t);
    }
    let _ = writeln!(out, "\nFinal ranking (top 5):");
    list_lines(&mut out, o.final_list(), BUGGY_METHOD, 5);
    let hit = run.report.per_bug.get(BUG_ID).and_then(|m| m.first_hit_rank);
    match hit {
        Some(r) => {
            let _ = write!(out, "\nBuggy method found at rank {r}.");
        }
        None => {
            let _ = write!(out, "\nBuggy method not found.");
        }
    }
    out
}
