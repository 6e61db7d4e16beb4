//! The search (Agent4SR) and refinement (Agent4LR) agents, the two-stage
//! driver and repetition-mode aggregation.

mod flexfl;
mod parse;
mod pipeline;
mod prompt;
mod repetition;

pub use flexfl::{run_flexfl, stage1, stage2, FlexFlConfig, FlexFlOutput, Stage1Output, Stage2Output, FINAL_TECHNIQUE};
pub use parse::{parse_function_call, parse_summary};
pub use pipeline::{render_candidates, run_agent};
pub use prompt::{describe_functions, evidence_phrase, fill, PromptSet, PROMPT_VERSION};
pub use repetition::{aggregate_repetitions, RepetitionRun};

use crate::llm::ChatMessage;
use crate::llm::GatewayError;
use crate::ranking::RankedList;
use crate::toolbox::{FunctionCall, ToolResult};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    /// Space reduction: explores the whole repository.
    Sr,
    /// Localization refinement: inspects a candidate list.
    Lr,
}

impl AgentKind {
    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Sr => "agent4sr",
            AgentKind::Lr => "agent4lr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Methods requested in the summary.
    pub k: usize,
    /// Initial cap on function-call turns.
    pub max_calls: usize,
    /// The cap is never lowered below this on context overflow.
    pub min_max_calls: usize,
    /// Independent runs aggregated per agent.
    pub repetition_runs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 5,
            max_calls: 10,
            min_max_calls: 1,
            repetition_runs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("pipeline.k must be at least 1".into());
        }
        if self.min_max_calls == 0 {
            return Err("pipeline.min_max_calls must be at least 1".into());
        }
        if self.max_calls < self.min_max_calls {
            return Err(format!(
                "pipeline.max_calls ({}) is below pipeline.min_max_calls ({})",
                self.max_calls, self.min_max_calls
            ));
        }
        if self.repetition_runs == 0 {
            return Err("pipeline.repetition_runs must be at least 1".into());
        }
        Ok(())
    }
}

/// One function-call turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    /// The assistant text as received.
    pub response: String,
    /// The parsed call; absent when the response held none.
    pub call: Option<FunctionCall>,
    pub result: ToolResult,
}

/// Everything one agent run said and did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub kind: AgentKind,
    pub messages: Vec<ChatMessage>,
    pub calls: Vec<CallRecord>,
    pub reasoning: String,
    pub summary_raw: String,
    /// Names as written in the summary, before repair.
    pub summary_names: Vec<String>,
    pub predictions: RankedList,
    /// Call cap of the final attempt.
    pub max_used: usize,
    /// Restarts caused by context overflow.
    pub reruns: usize,
    /// True when the run overflowed at the minimum cap and gave up.
    pub overflow: bool,
    /// Requests sent during the final attempt.
    pub gateway_calls: usize,
    /// Predictions outside the candidate list (refinement only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub off_list: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("the refinement agent needs a candidate list")]
    MissingCandidates,
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Baseline(#[from] crate::baseline::BaselineError),
}
