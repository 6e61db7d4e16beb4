//! Prompt templates. Placeholders are written `{{name}}`.

use crate::toolbox::FunctionSpec;
use std::path::Path;

pub const PROMPT_VERSION: &str = "v1";

const FILES: [&str; 9] = [
    "system",
    "task_search",
    "task_refine",
    "report",
    "tests",
    "candidates",
    "reasoning",
    "call",
    "summary",
];

/// One complete set of templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub system: String,
    pub task_search: String,
    pub task_refine: String,
    pub report: String,
    pub tests: String,
    pub candidates: String,
    pub reasoning: String,
    pub call: String,
    pub summary: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            system: include_str!("../../prompts/v1/system.txt").into(),
            task_search: include_str!("../../prompts/v1/task_search.txt").into(),
            task_refine: include_str!("../../prompts/v1/task_refine.txt").into(),
            report: include_str!("../../prompts/v1/report.txt").into(),
            tests: include_str!("../../prompts/v1/tests.txt").into(),
            candidates: include_str!("../../prompts/v1/candidates.txt").into(),
            reasoning: include_str!("../../prompts/v1/reasoning.txt").into(),
            call: include_str!("../../prompts/v1/call.txt").into(),
            summary: include_str!("../../prompts/v1/summary.txt").into(),
        }
    }
}

impl PromptSet {
    /// Load `<name>.txt` for every template from `dir`; missing files keep
    /// the built-in text.
    pub fn load_dir(dir: &Path) -> Result<PromptSet, String> {
        if !dir.is_dir() {
            return Err(format!("prompt directory {} does not exist", dir.display()));
        }
        let mut set = PromptSet::default();
        for name in FILES {
            let path = dir.join(format!("{name}.txt"));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            *set.slot(name) = text;
        }
        Ok(set)
    }

    fn slot(&mut self, name: &str) -> &mut String {
        match name {
            "system" => &mut self.system,
            "task_search" => &mut self.task_search,
            "task_refine" => &mut self.task_refine,
            "report" => &mut self.report,
            "tests" => &mut self.tests,
            "candidates" => &mut self.candidates,
            "reasoning" => &mut self.reasoning,
            "call" => &mut self.call,
            "summary" => &mut self.summary,
            _ => unreachable!("unknown template {name}"),
        }
    }
}

/// Substitute `{{key}}` placeholders. Unknown placeholders are left as is.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// `- name(argument): description` per function.
pub fn describe_functions(specs: &[FunctionSpec]) -> String {
    specs
        .iter()
        .map(|s| format!("- {}({}): {}", s.name, s.argument.unwrap_or(""), s.description))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Names the available evidence: "the bug report", "the trigger tests" or both.
pub fn evidence_phrase(report: bool, tests: bool) -> &'static str {
    match (report, tests) {
        (true, true) => "the bug report and the trigger tests",
        (true, false) => "the bug report",
        (false, true) => "the trigger tests",
        (false, false) => "the available information",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolbox::SEARCH_FUNCTIONS;

    #[test]
    fn placeholders_are_filled() {
        assert_eq!(fill("a {{x}} b {{y}}\n", &[("x", "1")]), "a 1 b {{y}}");
    }

    #[test]
    fn builtin_templates_use_known_placeholders() {
        let p = PromptSet::default();
        assert!(p.system.contains("{{task}}") && p.system.contains("{{max_calls}}"));
        assert!(p.summary.contains("Top_1: PathName.ClassName.MethodName(ArgTypeList)"));
        let d = describe_functions(&SEARCH_FUNCTIONS);
        assert_eq!(d.lines().count(), 7);
        assert!(d.starts_with("- get_paths(): "));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("reasoning.txt"), "Think.").unwrap();
        let p = PromptSet::load_dir(dir.path()).unwrap();
        assert_eq!(p.reasoning, "Think.");
        assert_eq!(p.call, PromptSet::default().call);
        assert!(PromptSet::load_dir(&dir.path().join("missing")).is_err());
    }
}
