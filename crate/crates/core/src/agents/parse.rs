//! Extraction of function calls and summaries from free-form model output.

use crate::toolbox::FunctionCall;
use regex::Regex;
use std::sync::OnceLock;

fn call_head() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b([A-Za-z_][A-Za-z0-9_]*)\(").expect("valid regex"))
}

fn summary_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\W*top[\s_\-]*(\d+)\W*?\s*[:：.\-]\s*(.+)$").expect("valid regex"))
}

fn strip_markup(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
        .replace('`', "")
}

/// Byte offset just past the `)` closing the `(` at `open`, honouring
/// quotes. `None` when unbalanced.
fn closing_paren(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in s[open..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// First `Name(argument)` in `text`, after removing code fences and
/// backticks. Returns `None` when nothing balanced is found.
pub fn parse_function_call(text: &str) -> Option<FunctionCall> {
    let clean = strip_markup(text);
    for cap in call_head().captures_iter(&clean) {
        let name = cap.get(1).expect("group 1");
        let open = name.end();
        if let Some(close) = closing_paren(&clean, open) {
            return Some(FunctionCall::new(name.as_str(), clean[open + 1..close - 1].trim()));
        }
    }
    None
}

/// Method names from `Top_<i>: name` lines, ordered by `i`, at most `k`.
/// A repeated `i` keeps its first line.
pub fn parse_summary(text: &str, k: usize) -> Vec<String> {
    let clean = strip_markup(text);
    let mut found: Vec<(usize, String)> = Vec::new();
    for line in clean.lines() {
        let Some(cap) = summary_line().captures(line.trim()) else {
            continue;
        };
        let Ok(i) = cap[1].parse::<usize>() else {
            continue;
        };
        if found.iter().any(|(j, _)| *j == i) {
            continue;
        }
        if let Some(name) = method_name(&cap[2]) {
            found.push((i, name));
        }
    }
    found.sort_by_key(|(i, _)| *i);
    found.into_iter().take(k).map(|(_, n)| n).collect()
}

/// The method reference at the start of `rest`: up to the balanced `)` if
/// one follows the name, else the first word.
fn method_name(rest: &str) -> Option<String> {
    let rest = rest.trim_matches(|c: char| c == '*' || c == '"' || c == '\'' || c.is_whitespace());
    let word_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
    let name = match rest.find('(') {
        Some(open) if open <= word_end => match closing_paren(rest, open) {
            Some(close) => rest[..close].to_string(),
            None => rest[..word_end].to_string(),
        },
        _ => rest[..word_end].trim_end_matches(['.', ',', ';']).to_string(),
    };
    let name: String = name.split_whitespace().collect::<Vec<_>>().join("");
    (!name.is_empty()).then_some(name)
}
