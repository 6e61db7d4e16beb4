//! Function calls available to the agents.
//!
//! The search agent gets navigation (`get_*`), fuzzy search (`find_*`) and
//! `exit`. The refinement agent only gets snippet retrieval by candidate index
//! and `exit`. Every result is plain text destined for the conversation.

use crate::index::RepoIndex;
use crate::matcher::{postprocess_detailed, MatchOutcome, MatchPhase, MatcherConfig};
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};

/// Returned for calls that cannot be parsed or name no registered function.
pub const CORRECTIVE_PROMPT: &str = "Please call functions in the right format `FunctionName(Argument).`";

pub const DEFAULT_OUTPUT_CAP: usize = 6000;

/// A call emitted by the model, e.g. `find_class("DateTimeZone")`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionCall {
    pub name: String,
    pub raw_argument: String,
}

impl FunctionCall {
    pub fn new(name: impl Into<String>, raw_argument: impl Into<String>) -> Self {
        FunctionCall {
            name: name.into(),
            raw_argument: raw_argument.into(),
        }
    }

    /// Arguments split on top-level commas, with whitespace and surrounding
    /// quotes removed.
    pub fn arguments(&self) -> Vec<String> {
        let mut args = Vec::new();
        let mut depth = 0i32;
        let mut quote: Option<char> = None;
        let mut cur = String::new();
        for c in self.raw_argument.chars() {
            match (quote, c) {
                (Some(q), c) if c == q => {
                    quote = None;
                    cur.push(c);
                }
                (Some(_), c) => cur.push(c),
                (None, '"' | '\'' | '`') => {
                    quote = Some(c);
                    cur.push(c);
                }
                (None, '(' | '[' | '<') => {
                    depth += 1;
                    cur.push(c);
                }
                (None, ')' | ']' | '>') => {
                    depth -= 1;
                    cur.push(c);
                }
                (None, ',') if depth == 0 => args.push(std::mem::take(&mut cur)),
                (None, c) => cur.push(c),
            }
        }
        args.push(cur);
        args.iter()
            .map(|a| unquote(a.trim()).to_string())
            .filter(|a| !a.is_empty())
            .collect()
    }

    /// The whole argument as one value (quotes stripped).
    pub fn argument(&self) -> String {
        unquote(self.raw_argument.trim()).trim().to_string()
    }
}

impl std::fmt::Display for FunctionCall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({})", self.name, self.raw_argument)
    }
}

fn unquote(s: &str) -> &str {
    for q in ['"', '\'', '`'] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolResult {
    pub text: String,
    pub is_exit: bool,
    pub is_error: bool,
}

impl ToolResult {
    fn ok(text: String) -> Self {
        ToolResult {
            text,
            is_exit: false,
            is_error: false,
        }
    }

    fn error(text: String) -> Self {
        ToolResult {
            text,
            is_exit: false,
            is_error: true,
        }
    }

    pub fn exit() -> Self {
        ToolResult {
            text: String::new(),
            is_exit: true,
            is_error: false,
        }
    }

    pub fn corrective() -> Self {
        ToolResult::error(CORRECTIVE_PROMPT.to_string())
    }
}

/// Static description of one function call, rendered into the system prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionSpec {
    pub name: &'static str,
    pub argument: Option<&'static str>,
    pub description: &'static str,
}

pub const SEARCH_FUNCTIONS: [FunctionSpec; 7] = [
    FunctionSpec {
        name: "get_paths",
        argument: None,
        description: "Get the paths of the Java software system",
    },
    FunctionSpec {
        name: "get_classes_of_path",
        argument: Some("path_name"),
        description: "Get the classes in the path of the Java software system",
    },
    FunctionSpec {
        name: "get_methods_of_class",
        argument: Some("class_name"),
        description: "Get the methods belonging to the class of the Java software system",
    },
    FunctionSpec {
        name: "get_code_snippet_of_method",
        argument: Some("method_name"),
        description: "Get the code snippet of the Java method",
    },
    FunctionSpec {
        name: "find_class",
        argument: Some("class_name"),
        description: "Find the class through fuzzy search",
    },
    FunctionSpec {
        name: "find_method",
        argument: Some("method_name"),
        description: "Find the method through fuzzy search",
    },
    FunctionSpec {
        name: "exit",
        argument: None,
        description: "Exit function calling",
    },
];

pub const REFINE_FUNCTIONS: [FunctionSpec; 2] = [
    FunctionSpec {
        name: "get_code_snippet_of_method",
        argument: Some("candidate_index"),
        description: "Get the code snippet of the Java method with the given index in the candidate list",
    },
    FunctionSpec {
        name: "exit",
        argument: None,
        description: "Exit function calling",
    },
];

fn cap(text: String, limit: usize) -> String {
    if text.chars().count() <= limit {
        return text;
    }
    let cut: String = text.chars().take(limit).collect();
    let dropped = text.chars().count() - limit;
    format!("{cut}\n... [truncated {dropped} characters]")
}

fn listing(items: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    items
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn get_paths(index: &RepoIndex) -> ToolResult {
    if index.paths().is_empty() {
        return ToolResult::ok("no paths".into());
    }
    ToolResult::ok(listing(index.paths().iter().map(|p| {
        if p.is_empty() {
            "<default package>"
        } else {
            p
        }
    })))
}

fn suggestions(kind: &str, query: &str, outcome: &MatchOutcome) -> ToolResult {
    let lead = match outcome.phase {
        MatchPhase::Closest => format!("No {kind} named `{query}` exists. Did you mean one of these?"),
        _ => format!("`{query}` matches several {kind}s. Did you mean one of these?"),
    };
    ToolResult::error(format!("{lead}\n{}", listing(&outcome.names)))
}

fn resolve(query: &str, exact: bool, universe: &[String], cfg: &MatcherConfig) -> Result<String, Option<MatchOutcome>> {
    if exact {
        return Ok(query.to_string());
    }
    if universe.is_empty() {
        return Err(None);
    }
    let outcome = postprocess_detailed(query, universe, cfg).map_err(|_| None)?;
    match outcome.resolved() {
        Some(one) => Ok(one.to_string()),
        None => Err(Some(outcome)),
    }
}

pub fn get_classes_of_path(index: &RepoIndex, path_name: &str, cfg: &MatcherConfig) -> ToolResult {
    let paths: Vec<String> = index.paths().iter().cloned().collect();
    match resolve(path_name, index.classes_of_path(path_name).is_some(), &paths, cfg) {
        Ok(path) => {
            let classes = index.classes_of_path(&path).expect("resolved path exists");
            let body = listing(classes);
            if path == path_name {
                ToolResult::ok(body)
            } else {
                ToolResult::ok(format!("Classes of path {path}:\n{body}"))
            }
        }
        Err(Some(outcome)) => suggestions("path", path_name, &outcome),
        Err(None) => ToolResult::error(format!("No path named `{path_name}` exists.")),
    }
}

pub fn get_methods_of_class(index: &RepoIndex, class_name: &str, cfg: &MatcherConfig) -> ToolResult {
    match resolve(class_name, index.has_class(class_name), index.class_fqns(), cfg) {
        Ok(class) => {
            let methods: Vec<String> = index
                .methods_of_class(&class)
                .expect("resolved class exists")
                .map(|m| m.signature())
                .collect();
            let body = if methods.is_empty() {
                "no methods".to_string()
            } else {
                listing(methods)
            };
            if class == class_name {
                ToolResult::ok(body)
            } else {
                ToolResult::ok(format!("Methods of class {class}:\n{body}"))
            }
        }
        Err(Some(outcome)) => suggestions("class", class_name, &outcome),
        Err(None) => ToolResult::error(format!("No class named `{class_name}` exists.")),
    }
}

pub fn get_code_snippet_of_method(index: &RepoIndex, method_name: &str, cfg: &MatcherConfig) -> ToolResult {
    match resolve(method_name, index.method(method_name).is_some(), index.all_method_fqns(), cfg) {
        Ok(fqn) => {
            let snippet = &index.method(&fqn).expect("resolved method exists").snippet;
            if fqn == method_name {
                ToolResult::ok(snippet.clone())
            } else {
                ToolResult::ok(format!("// method: {fqn}\n{snippet}"))
            }
        }
        Err(Some(outcome)) if outcome.phase != MatchPhase::Closest => ToolResult::error(format!(
            "`{method_name}` matches several methods. Call get_code_snippet_of_method again with one of these fully qualified names:\n{}",
            listing(&outcome.names)
        )),
        Err(Some(outcome)) => suggestions("method", method_name, &outcome),
        Err(None) => ToolResult::error(format!("No method named `{method_name}` exists.")),
    }
}

/// Snippet of the `position`-th (1-based) candidate, followed by its FQN.
pub fn get_code_snippet_by_candidate_index(index: &RepoIndex, candidates: &RankedList, position: usize) -> ToolResult {
    if position == 0 || position > candidates.len() {
        return ToolResult::error(format!(
            "Candidate index {position} is out of range; valid indexes are 1 to {}.",
            candidates.len()
        ));
    }
    let fqn = &candidates.entries[position - 1].fqn;
    match index.method(fqn) {
        Some(m) => ToolResult::ok(format!("{}\n// method: {fqn}", m.snippet)),
        None => ToolResult::error(format!(
            "The code of candidate {position} is unavailable.\n// method: {fqn}"
        )),
    }
}

pub fn find_class(index: &RepoIndex, fragment: &str, cfg: &MatcherConfig) -> ToolResult {
    fuzzy(fragment, index.class_fqns(), "class", cfg)
}

pub fn find_method(index: &RepoIndex, fragment: &str, cfg: &MatcherConfig) -> ToolResult {
    fuzzy(fragment, index.all_method_fqns(), "method", cfg)
}

fn fuzzy(fragment: &str, universe: &[String], kind: &str, cfg: &MatcherConfig) -> ToolResult {
    if fragment.trim().is_empty() {
        return ToolResult::error(format!("find_{kind} needs a non-empty name fragment."));
    }
    if universe.is_empty() {
        let plural = if kind == "class" { "classes" } else { "methods" };
        return ToolResult::error(format!("The program has no {plural} to search."));
    }
    match postprocess_detailed(fragment, universe, cfg) {
        Ok(outcome) => ToolResult::ok(listing(outcome.names)),
        Err(e) => ToolResult::error(e.to_string()),
    }
}

/// Which function set a toolbox exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToolSet {
    Search,
    Refine,
}

/// Dispatches parsed calls for one agent run.
#[derive(Debug, Clone)]
pub struct Toolbox<'a> {
    pub index: &'a RepoIndex,
    pub candidates: Option<&'a RankedList>,
    pub matcher: MatcherConfig,
    pub output_cap: usize,
    pub set: ToolSet,
}

impl<'a> Toolbox<'a> {
    pub fn search(index: &'a RepoIndex, matcher: MatcherConfig) -> Self {
        Toolbox {
            index,
            candidates: None,
            matcher,
            output_cap: DEFAULT_OUTPUT_CAP,
            set: ToolSet::Search,
        }
    }

    pub fn refine(index: &'a RepoIndex, candidates: &'a RankedList, matcher: MatcherConfig) -> Self {
        Toolbox {
            index,
            candidates: Some(candidates),
            matcher,
            output_cap: DEFAULT_OUTPUT_CAP,
            set: ToolSet::Refine,
        }
    }

    pub fn with_output_cap(mut self, cap: usize) -> Self {
        self.output_cap = cap;
        self
    }

    pub fn specs(&self) -> &'static [FunctionSpec] {
        match self.set {
            ToolSet::Search => &SEARCH_FUNCTIONS,
            ToolSet::Refine => &REFINE_FUNCTIONS,
        }
    }

    pub fn is_registered(&self, name: &str) -> bool {
        self.specs().iter().any(|s| s.name == name)
    }

    /// Execute a call. Unregistered names yield the corrective prompt.
    pub fn dispatch(&self, call: &FunctionCall) -> ToolResult {
        if !self.is_registered(&call.name) {
            return ToolResult::corrective();
        }
        let arg = call.argument();
        let cfg = &self.matcher;
        let result = match (self.set, call.name.as_str()) {
            (_, "exit") => return ToolResult::exit(),
            (ToolSet::Search, "get_paths") => get_paths(self.index),
            (ToolSet::Search, "get_classes_of_path") => get_classes_of_path(self.index, &arg, cfg),
            (ToolSet::Search, "get_methods_of_class") => get_methods_of_class(self.index, &arg, cfg),
            (ToolSet::Search, "get_code_snippet_of_method") => get_code_snippet_of_method(self.index, &arg, cfg),
            (ToolSet::Search, "find_class") => find_class(self.index, &arg, cfg),
            (ToolSet::Search, "find_method") => find_method(self.index, &arg, cfg),
            (ToolSet::Refine, "get_code_snippet_of_method") => self.snippet_by_index(&arg),
            _ => ToolResult::corrective(),
        };
        ToolResult {
            text: cap(result.text, self.output_cap),
            ..result
        }
    }

    fn snippet_by_index(&self, arg: &str) -> ToolResult {
        let candidates = self.candidates.expect("refine toolbox always has candidates");
        let trimmed = arg.trim().trim_start_matches('#');
        if let Ok(i) = trimmed.parse::<usize>() {
            return get_code_snippet_by_candidate_index(self.index, candidates, i);
        }
        if let Some(rank) = candidates.rank_of(trimmed) {
            return get_code_snippet_by_candidate_index(self.index, candidates, rank);
        }
        ToolResult::error(format!(
            "Please give the index of a candidate method, from 1 to {}.",
            candidates.len()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{index_sources, JavaExtractor};

    fn idx() -> RepoIndex {
        index_sources(
            [
                (
                    "p/A.java",
                    "package p;\nclass A {\n  void f(int x) {}\n  void g() {}\n}\n",
                ),
                ("p/q/B.java", "package p.q;\nclass B {\n  void f(int x) {}\n}\n"),
            ],
            &JavaExtractor,
        )
        .index
    }

    #[test]
    fn arguments_strip_quotes_and_split_top_level() {
        let c = FunctionCall::new("f", r#" "a.B" , 'c(d,e)' "#);
        assert_eq!(c.arguments(), vec!["a.B", "c(d,e)"]);
        assert_eq!(FunctionCall::new("f", "\"x\"").argument(), "x");
        assert_eq!(FunctionCall::new("f", "").arguments(), Vec::<String>::new());
    }

    #[test]
    fn output_is_capped_with_marker() {
        let long = "x".repeat(50);
        let capped = cap(long, 10);
        assert!(capped.starts_with("xxxxxxxxxx\n"));
        assert!(capped.ends_with("[truncated 40 characters]"));
        let index = idx();
        let tb = Toolbox::search(&index, MatcherConfig::default()).with_output_cap(3);
        let r = tb.dispatch(&FunctionCall::new("get_paths", ""));
        assert!(r.text.contains("[truncated"));
    }

    #[test]
    fn unknown_functions_get_the_corrective_prompt() {
        let index = idx();
        let tb = Toolbox::search(&index, MatcherConfig::default());
        let r = tb.dispatch(&FunctionCall::new("bogus_fn", "x"));
        assert_eq!(r.text, CORRECTIVE_PROMPT);
        assert!(r.is_error);
        let cands = RankedList::from_fqns("c", ["p.A.g()"]);
        let lr = Toolbox::refine(&index, &cands, MatcherConfig::default());
        assert_eq!(
            lr.dispatch(&FunctionCall::new("find_class", "A")).text,
            CORRECTIVE_PROMPT
        );
    }

    #[test]
    fn exit_has_empty_text() {
        let index = idx();
        let r = Toolbox::search(&index, MatcherConfig::default()).dispatch(&FunctionCall::new("exit", ""));
        assert!(r.is_exit && r.text.is_empty() && !r.is_error);
    }

    #[test]
    fn single_match_resolves_ambiguity_lists() {
        let index = idx();
        let cfg = MatcherConfig::default();
        let r = get_code_snippet_of_method(&index, "g", &cfg);
        assert_eq!(r.text, "// method: p.A.g()\n  void g() {}");
        let r = get_code_snippet_of_method(&index, "f", &cfg);
        assert!(r.is_error && r.text.contains("p.A.f(int)") && r.text.contains("p.q.B.f(int)"));
        let r = get_methods_of_class(&index, "B", &cfg);
        assert_eq!(r.text, "Methods of class p.q.B:\nf(int)");
    }

    #[test]
    fn refine_accepts_index_or_listed_fqn() {
        let index = idx();
        let cands = RankedList::from_fqns("c", ["p.A.g()", "p.q.B.f(int)"]);
        let tb = Toolbox::refine(&index, &cands, MatcherConfig::default());
        let r = tb.dispatch(&FunctionCall::new("get_code_snippet_of_method", "2"));
        assert!(r.text.ends_with("// method: p.q.B.f(int)"));
        let r = tb.dispatch(&FunctionCall::new("get_code_snippet_of_method", "\"p.A.g()\""));
        assert!(r.text.ends_with("// method: p.A.g()"));
        let r = tb.dispatch(&FunctionCall::new("get_code_snippet_of_method", "3"));
        assert!(r.is_error && r.text.contains("1 to 2"));
    }
}
