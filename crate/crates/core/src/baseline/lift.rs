use super::{read_file, BaselineError};
use crate::index::RepoIndex;
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One entry of a statement-level ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRef {
    pub file: String,
    pub line: usize,
}

/// Parse a JSON-lines statement list, in ranked order.
pub fn parse_statements(text: &str, origin: &str) -> Result<Vec<StatementRef>, BaselineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| BaselineError::Format {
                path: origin.to_string(),
                message: format!("line {}: {e}", n + 1),
            })
        })
        .collect()
}

pub fn read_statements(path: &Path) -> Result<Vec<StatementRef>, BaselineError> {
    parse_statements(&read_file(path)?, &path.display().to_string())
}

/// Replace each statement by its enclosing method, keeping the first
/// occurrence. Statements outside any method are dropped. A method's score
/// is the reciprocal of the rank of its first statement.
pub fn lift_statement_ranks(statements: &[StatementRef], index: &RepoIndex, technique: &str) -> RankedList {
    let mut list = RankedList::new(technique);
    let mut dropped = 0usize;
    for (i, s) in statements.iter().enumerate() {
        match index.enclosing_method(&s.file, s.line) {
            Some(m) if !list.contains(&m.fqn) => list.push(m.fqn.clone(), 1.0 / (i + 1) as f64),
            Some(_) => {}
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::debug!("{technique}: {dropped} statement(s) lie outside any method");
    }
    list
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{index_sources, JavaExtractor};
    use proptest::prelude::*;

    fn index() -> RepoIndex {
        let a = "package p;\nclass A {\n  int field = 3;\n  void f() {\n    int x = 1;\n    x++;\n  }\n}\n";
        let b = "package p;\nclass B {\n  void g() {\n    return;\n  }\n}\n";
        index_sources([("src/p/A.java", a), ("src/p/B.java", b)], &JavaExtractor).index
    }

    fn st(file: &str, line: usize) -> StatementRef {
        StatementRef {
            file: file.into(),
            line,
        }
    }

    #[test]
    fn statements_collapse_to_methods() {
        let l = lift_statement_ranks(
            &[st("p/A.java", 5), st("p/A.java", 6), st("p/B.java", 4)],
            &index(),
            "sbir",
        );
        assert_eq!(l.fqns().collect::<Vec<_>>(), vec!["p.A.f()", "p.B.g()"]);
        assert_eq!(l.entries[1].score, 1.0 / 3.0);
        l.validate().unwrap();
    }

    #[test]
    fn field_declarations_are_dropped() {
        let l = lift_statement_ranks(&[st("p/A.java", 3), st("p/A.java", 5)], &index(), "sbir");
        assert_eq!(l.fqns().collect::<Vec<_>>(), vec!["p.A.f()"]);
    }

    #[test]
    fn statement_file_format() {
        let s = parse_statements(
            "{\"file\":\"p/A.java\",\"line\":5}\n\n{\"file\":\"p/B.java\",\"line\":4}\n",
            "m",
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        let err = parse_statements("{\"file\":1}", "stmts.jsonl").unwrap_err();
        assert!(err.to_string().contains("stmts.jsonl"));
    }

    proptest! {
        #[test]
        fn lifting_never_lengthens(lines in proptest::collection::vec((any::<bool>(), 1usize..9), 0..30)) {
            let stmts: Vec<StatementRef> = lines
                .into_iter()
                .map(|(a, l)| st(if a { "p/A.java" } else { "p/B.java" }, l))
                .collect();
            let l = lift_statement_ranks(&stmts, &index(), "sbir");
            prop_assert!(l.len() <= stmts.len());
            prop_assert!(l.validate().is_ok());
        }
    }
}
