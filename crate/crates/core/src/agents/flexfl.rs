use super::prompt::PromptSet;
use super::repetition::{aggregate_repetitions, RepetitionRun};
use super::{run_agent, AgentError, AgentKind, AgentTranscript, PipelineConfig};
use crate::baseline::{
    fuse, irfl_score, sbfl_score, Bm25Params, CoverageSpectrum, Formula, FusionConfig, AGENT_TECHNIQUE,
};
use crate::bug_input::BugInfo;
use crate::index::RepoIndex;
use crate::llm::{ChatBackend, Gateway, SamplingConfig};
use crate::matcher::MatcherConfig;
use crate::ranking::RankedList;
use crate::toolbox::DEFAULT_OUTPUT_CAP;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Label of the final ranked list.
pub const FINAL_TECHNIQUE: &str = "flexfl";

/// All tunables of a localization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlexFlConfig {
    pub pipeline: PipelineConfig,
    pub fusion: FusionConfig,
    pub matcher: MatcherConfig,
    /// Sampling for single runs.
    pub sampling: SamplingConfig,
    /// Sampling when `pipeline.repetition_runs > 1`.
    pub repetition_sampling: SamplingConfig,
    pub sbfl_formula: Formula,
    pub bm25: Bm25Params,
    /// Maximum characters of one tool result.
    pub output_cap: usize,
    #[serde(skip)]
    pub prompts: PromptSet,
}

impl Default for FlexFlConfig {
    fn default() -> Self {
        FlexFlConfig {
            pipeline: PipelineConfig::default(),
            fusion: FusionConfig::default(),
            matcher: MatcherConfig::default(),
            sampling: SamplingConfig::default(),
            repetition_sampling: SamplingConfig::repetition(),
            sbfl_formula: Formula::Ochiai,
            bm25: Bm25Params::default(),
            output_cap: DEFAULT_OUTPUT_CAP,
            prompts: PromptSet::default(),
        }
    }
}

impl FlexFlConfig {
    pub fn effective_sampling(&self) -> SamplingConfig {
        if self.pipeline.repetition_runs > 1 {
            self.repetition_sampling
        } else {
            self.sampling
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.pipeline.validate()?;
        self.fusion.validate()?;
        self.matcher.validate()?;
        self.sampling.validate()?;
        self.repetition_sampling.validate()?;
        if self.output_cap == 0 {
            return Err("output_cap must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Output {
    pub sr_runs: Vec<AgentTranscript>,
    /// Every list that went into fusion, by technique.
    pub lists: BTreeMap<String, RankedList>,
    pub candidates: RankedList,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Output {
    pub lr_runs: Vec<AgentTranscript>,
    /// Refinement predictions (aggregated in repetition mode).
    pub predictions: RankedList,
    /// Predictions followed by the remaining candidates.
    pub final_list: RankedList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexFlOutput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bug_id: Option<String>,
    pub stage1: Stage1Output,
    pub stage2: Stage2Output,
}

impl FlexFlOutput {
    pub fn final_list(&self) -> &RankedList {
        &self.stage2.final_list
    }
}

fn run_repeated<B: ChatBackend>(
    kind: AgentKind,
    bug: &BugInfo,
    index: &RepoIndex,
    candidates: Option<&RankedList>,
    gateway: &Gateway<B>,
    cfg: &FlexFlConfig,
) -> Result<(Vec<AgentTranscript>, RankedList), AgentError> {
    let runs = (0..cfg.pipeline.repetition_runs)
        .map(|_| run_agent(kind, bug, index, candidates, gateway, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let list = if runs.len() == 1 {
        runs[0].predictions.clone()
    } else {
        aggregate_repetitions(
            &RepetitionRun::from_lists(runs.iter().map(|t| &t.predictions)),
            kind.label(),
        )
    };
    Ok((runs, list))
}

/// Space reduction: search agent plus the available non-LLM techniques,
/// fused into the candidate list. Lists in `external` replace computed
/// lists of the same technique.
pub fn stage1<B: ChatBackend>(
    bug: &BugInfo,
    index: &RepoIndex,
    spectrum: Option<&CoverageSpectrum>,
    external: &BTreeMap<String, RankedList>,
    gateway: &Gateway<B>,
    cfg: &FlexFlConfig,
) -> Result<Stage1Output, AgentError> {
    bug.validate().map_err(AgentError::InvalidInput)?;
    let mut warnings = Vec::new();
    let mut lists = BTreeMap::new();
    if let Some(s) = spectrum {
        let (resolved, w) = s.resolve(index);
        warnings.extend(w);
        match sbfl_score(&resolved, cfg.sbfl_formula) {
            Ok(l) => {
                lists.insert(l.technique.clone(), l);
            }
            Err(e) => warnings.push(format!("spectrum skipped: {e}")),
        }
    }
    if bug.has_report() {
        let l = irfl_score(index, bug.report.as_ref(), &cfg.bm25)?;
        lists.insert(l.technique.clone(), l);
    }
    for (technique, list) in external {
        lists.insert(technique.clone(), list.clone());
    }

    let (sr_runs, agent_list) = run_repeated(AgentKind::Sr, bug, index, None, gateway, cfg)?;
    lists.insert(AGENT_TECHNIQUE.to_string(), agent_list);
    let candidates = fuse(&lists, &cfg.fusion)?;
    Ok(Stage1Output {
        sr_runs,
        lists,
        candidates,
        warnings,
    })
}

/// Localization refinement over `candidates`.
pub fn stage2<B: ChatBackend>(
    bug: &BugInfo,
    index: &RepoIndex,
    candidates: &RankedList,
    gateway: &Gateway<B>,
    cfg: &FlexFlConfig,
) -> Result<Stage2Output, AgentError> {
    let (lr_runs, predictions) = run_repeated(AgentKind::Lr, bug, index, Some(candidates), gateway, cfg)?;
    let final_list = RankedList::from_fqns(
        FINAL_TECHNIQUE,
        predictions.fqns().chain(candidates.fqns()).map(str::to_string),
    );
    Ok(Stage2Output {
        lr_runs,
        predictions,
        final_list,
    })
}

/// Both stages. The search and refinement agents may use different
/// gateways (e.g. separate replay scripts).
pub fn run_flexfl<B1: ChatBackend, B2: ChatBackend>(
    bug: &BugInfo,
    index: &RepoIndex,
    spectrum: Option<&CoverageSpectrum>,
    external: &BTreeMap<String, RankedList>,
    sr_gateway: &Gateway<B1>,
    lr_gateway: &Gateway<B2>,
    cfg: &FlexFlConfig,
) -> Result<FlexFlOutput, AgentError> {
    let stage1 = stage1(bug, index, spectrum, external, sr_gateway, cfg)?;
    let stage2 = stage2(bug, index, &stage1.candidates, lr_gateway, cfg)?;
    Ok(FlexFlOutput {
        bug_id: bug.bug_id.clone(),
        stage1,
        stage2,
    })
}
