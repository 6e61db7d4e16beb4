use super::parse::{parse_function_call, parse_summary};
use super::prompt::{describe_functions, evidence_phrase, fill};
use super::{AgentError, AgentKind, AgentTranscript, CallRecord, FlexFlConfig};
use crate::bug_input::{render_report, render_trigger_tests, BugInfo};
use crate::index::RepoIndex;
use crate::llm::{ChatBackend, ChatMessage, Gateway, GatewayError};
use crate::matcher::postprocess;
use crate::ranking::RankedList;
use crate::toolbox::{ToolResult, Toolbox};

/// `1. fqn` per candidate.
pub fn render_candidates(candidates: &RankedList) -> String {
    candidates
        .entries
        .iter()
        .map(|e| format!("{}. {}", e.rank, e.fqn))
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_inputs(
    kind: AgentKind,
    bug: &BugInfo,
    index: &RepoIndex,
    candidates: Option<&RankedList>,
    cfg: &FlexFlConfig,
) -> (String, Vec<String>) {
    let p = &cfg.prompts;
    let mut sections = Vec::new();
    let mut warnings = Vec::new();
    if let Some(report) = &bug.report {
        sections.push(fill(&p.report, &[("report", &render_report(report))]));
    }
    if bug.has_trigger_tests() {
        let (tests, w) = render_trigger_tests(&bug.trigger_tests, &bug.effective_prefixes(index));
        warnings.extend(w);
        sections.push(fill(&p.tests, &[("tests", &tests)]));
    }
    if let (AgentKind::Lr, Some(c)) = (kind, candidates) {
        sections.push(fill(&p.candidates, &[("candidates", &render_candidates(c))]));
    }
    (sections.join("\n\n"), warnings)
}

enum Failure {
    Overflow,
    Fatal(GatewayError),
}

struct Attempt<'a, B> {
    gateway: &'a Gateway<B>,
    cfg: &'a FlexFlConfig,
    t: AgentTranscript,
}

impl<B: ChatBackend> Attempt<'_, B> {
    fn ask(&mut self, user: String) -> Result<String, Failure> {
        self.t.messages.push(ChatMessage::user(user));
        self.t.gateway_calls += 1;
        match self.gateway.complete(&self.t.messages, &self.cfg.effective_sampling()) {
            Ok(reply) => {
                let text = reply.content.clone();
                self.t.messages.push(reply);
                Ok(text)
            }
            Err(GatewayError::ContextOverflow(msg)) => {
                log::info!(
                    "{}: context overflow with MAX={}: {msg}",
                    self.t.kind.label(),
                    self.t.max_used
                );
                Err(Failure::Overflow)
            }
            Err(e) => Err(Failure::Fatal(e)),
        }
    }
}

fn with_pending(pending: &str, request: String) -> String {
    if pending.is_empty() {
        request
    } else {
        format!("{pending}\n\n{request}")
    }
}

fn result_message(call: Option<&crate::toolbox::FunctionCall>, result: &ToolResult) -> String {
    match call {
        Some(c) if result.text != crate::toolbox::CORRECTIVE_PROMPT => format!("Result of {c}:\n{}", result.text),
        _ => result.text.clone(),
    }
}

/// Map summary names onto indexed methods; each name contributes its first
/// repaired match not already predicted.
fn repair(names: &[String], index: &RepoIndex, cfg: &FlexFlConfig, label: &str) -> RankedList {
    let mut picked: Vec<String> = Vec::new();
    if index.all_method_fqns().is_empty() {
        return RankedList::new(label);
    }
    for name in names {
        if let Ok(matches) = postprocess(name, index.all_method_fqns(), &cfg.matcher) {
            if let Some(m) = matches.into_iter().find(|m| !picked.contains(m)) {
                picked.push(m);
            }
        }
    }
    RankedList::from_fqns(label, picked)
}

fn attempt<B: ChatBackend>(
    a: &mut Attempt<'_, B>,
    toolbox: &Toolbox<'_>,
    system: String,
    inputs: &str,
    index: &RepoIndex,
) -> Result<(), Failure> {
    let p = &a.cfg.prompts;
    let k = a.cfg.pipeline.k;
    let max = a.t.max_used;
    a.t.messages.push(ChatMessage::system(system));
    a.t.reasoning = a.ask(with_pending(inputs, p.reasoning.trim_end().to_string()))?;

    let mut pending = String::new();
    for i in 0..max {
        let request = fill(&p.call, &[("remaining", &(max - i).to_string())]);
        let response = a.ask(with_pending(&pending, request))?;
        let call = parse_function_call(&response);
        let result = match &call {
            Some(c) => toolbox.dispatch(c),
            None => ToolResult::corrective(),
        };
        pending = if result.is_exit {
            String::new()
        } else {
            result_message(call.as_ref(), &result)
        };
        let exit = result.is_exit;
        a.t.calls.push(CallRecord { response, call, result });
        if exit {
            break;
        }
    }

    let request = fill(&p.summary, &[("k", &k.to_string())]);
    a.t.summary_raw = a.ask(with_pending(&pending, request))?;
    a.t.summary_names = parse_summary(&a.t.summary_raw, k);
    a.t.predictions = repair(&a.t.summary_names, index, a.cfg, a.t.kind.label());
    Ok(())
}

/// Run one agent to completion.
///
/// On context overflow the call cap drops by one and the run restarts from
/// scratch, down to `min_max_calls`; at the floor the partial transcript is
/// returned with `overflow` set.
pub fn run_agent<B: ChatBackend>(
    kind: AgentKind,
    bug: &BugInfo,
    index: &RepoIndex,
    candidates: Option<&RankedList>,
    gateway: &Gateway<B>,
    cfg: &FlexFlConfig,
) -> Result<AgentTranscript, AgentError> {
    cfg.validate().map_err(AgentError::InvalidInput)?;
    bug.validate().map_err(AgentError::InvalidInput)?;
    let toolbox = match (kind, candidates) {
        (AgentKind::Sr, _) => Toolbox::search(index, cfg.matcher.clone()),
        (AgentKind::Lr, Some(c)) => Toolbox::refine(index, c, cfg.matcher.clone()),
        (AgentKind::Lr, None) => return Err(AgentError::MissingCandidates),
    }
    .with_output_cap(cfg.output_cap);

    let (inputs, warnings) = render_inputs(kind, bug, index, candidates, cfg);
    let p = &cfg.prompts;
    let k = cfg.pipeline.k.to_string();
    let evidence = evidence_phrase(bug.has_report(), bug.has_trigger_tests());
    let task_template = match kind {
        AgentKind::Sr => &p.task_search,
        AgentKind::Lr => &p.task_refine,
    };
    let task = fill(task_template, &[("k", &k), ("evidence", evidence)]);
    let functions = describe_functions(toolbox.specs());

    let mut max = cfg.pipeline.max_calls;
    let mut reruns = 0;
    loop {
        let system = fill(
            &p.system,
            &[
                ("task", &task),
                ("functions", &functions),
                ("max_calls", &max.to_string()),
                ("k", &k),
            ],
        );
        let mut a = Attempt {
            gateway,
            cfg,
            t: AgentTranscript {
                kind,
                messages: Vec::new(),
                calls: Vec::new(),
                reasoning: String::new(),
                summary_raw: String::new(),
                summary_names: Vec::new(),
                predictions: RankedList::new(kind.label()),
                max_used: max,
                reruns,
                overflow: false,
                gateway_calls: 0,
                off_list: Vec::new(),
                warnings: warnings.clone(),
            },
        };
        match attempt(&mut a, &toolbox, system, &inputs, index) {
            Ok(()) => {
                let mut t = a.t;
                if let Some(c) = candidates.filter(|_| kind == AgentKind::Lr) {
                    t.off_list = t
                        .predictions
                        .fqns()
                        .filter(|f| !c.contains(f))
                        .map(str::to_string)
                        .collect();
                }
                return Ok(t);
            }
            Err(Failure::Overflow) if max > cfg.pipeline.min_max_calls => {
                max -= 1;
                reruns += 1;
            }
            Err(Failure::Overflow) => {
                let mut t = a.t;
                t.overflow = true;
                t.warnings
                    .push(format!("context overflow at the minimum call cap {max}; no summary"));
                return Ok(t);
            }
            Err(Failure::Fatal(e)) => return Err(e.into()),
        }
    }
}
