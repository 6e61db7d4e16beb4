use super::BaselineError;
use crate::ranking::RankedList;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Label of the search agent's list; it always forms the last block.
pub const AGENT_TECHNIQUE: &str = "agent4sr";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Candidate-list length.
    pub m: usize,
    /// Entries taken from the search agent.
    pub k: usize,
    /// Block order. Techniques missing here follow, sorted by label; the
    /// agent block is always last.
    pub technique_order: Vec<String>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            m: 20,
            k: 5,
            technique_order: ["sbir", "ochiai", "boostn", AGENT_TECHNIQUE].map(String::from).to_vec(),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.k == 0 {
            return Err("fusion.k must be at least 1".into());
        }
        if self.m < self.k {
            return Err(format!("fusion.m ({}) must be at least fusion.k ({})", self.m, self.k));
        }
        Ok(())
    }

    fn ordered<'a>(&self, labels: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
        let mut labels: Vec<&str> = labels.collect();
        labels.sort_by_key(|l| {
            let pos = self.technique_order.iter().position(|t| t == l).unwrap_or(usize::MAX);
            (*l == AGENT_TECHNIQUE, pos, *l)
        });
        labels
    }
}

/// Per-technique quotas: the agent gets `k`; the rest of `m` is split
/// evenly across the other techniques, earlier ones taking the remainder.
fn quotas(order: &[&str], cfg: &FusionConfig) -> Vec<usize> {
    let agent = order.contains(&AGENT_TECHNIQUE);
    let others = order.len() - usize::from(agent);
    let share = cfg.m - if agent { cfg.k.min(cfg.m) } else { 0 };
    let mut seen_other = 0;
    order
        .iter()
        .map(|&t| {
            if t == AGENT_TECHNIQUE {
                return if others == 0 { cfg.m } else { cfg.k.min(cfg.m) };
            }
            let q = share / others + usize::from(seen_other < share % others);
            seen_other += 1;
            q
        })
        .collect()
}

/// Concatenate the top entries of each technique into a candidate list of
/// at most `m` distinct methods.
///
/// Each technique fills its quota from its own ranking, skipping methods an
/// earlier block already holds. When lists run short, the remaining slots go
/// to deeper entries of the other techniques, still inside their blocks.
pub fn fuse(lists: &BTreeMap<String, RankedList>, cfg: &FusionConfig) -> Result<RankedList, BaselineError> {
    if lists.is_empty() {
        return Err(BaselineError::Precondition(
            "fusion needs at least one ranked list".into(),
        ));
    }
    cfg.validate().map_err(BaselineError::Precondition)?;
    let order = cfg.ordered(lists.keys().map(String::as_str));
    let quota = quotas(&order, cfg);

    let mut seen: HashSet<&str> = HashSet::new();
    let mut cursor = vec![0usize; order.len()];
    let mut blocks: Vec<Vec<&str>> = vec![Vec::new(); order.len()];
    let mut total = 0;

    let mut take = |i: usize, want: usize| {
        let list = &lists[order[i]];
        let mut got = 0;
        while got < want && total < cfg.m && cursor[i] < list.len() {
            let fqn = list.entries[cursor[i]].fqn.as_str();
            cursor[i] += 1;
            if seen.insert(fqn) {
                blocks[i].push(fqn);
                got += 1;
                total += 1;
            }
        }
    };
    for (i, &q) in quota.iter().enumerate() {
        take(i, q);
    }
    // Backfill: non-agent techniques first, then the agent.
    let mut refill: Vec<usize> = (0..order.len()).collect();
    refill.sort_by_key(|&i| order[i] == AGENT_TECHNIQUE);
    for i in refill {
        take(i, usize::MAX);
    }

    let mut fused = RankedList::new("candidates");
    for (i, block) in blocks.iter().enumerate() {
        for fqn in block {
            fused.push(*fqn, 1.0 / (fused.len() + 1) as f64);
            fused.entries.last_mut().expect("just pushed").technique = Some(order[i].to_string());
        }
    }
    Ok(fused)
}
