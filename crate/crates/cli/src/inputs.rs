use crate::config::RunConfig;
use anyhow::{anyhow, bail, Context, Result};
use flexloc::baseline::{lift_statement_ranks, read_statements, CoverageSpectrum};
use flexloc::bug_input::{load_bug_info, BugInfo};
use flexloc::index::RepoIndex;
use flexloc::llm::{
    ChatBackend, ChatMessage, Gateway, GatewayError, HttpBackend, HttpSettings, ReplayBackend, SamplingConfig,
};
use flexloc::ranking::RankedList;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Either a scripted replay or a live endpoint.
pub enum Backend {
    Replay(ReplayBackend),
    Http(HttpBackend),
}

impl ChatBackend for Backend {
    fn respond(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<String, GatewayError> {
        match self {
            Backend::Replay(b) => b.respond(history, sampling),
            Backend::Http(b) => b.respond(history, sampling),
        }
    }
}

impl Backend {
    pub fn open(replay: Option<&Path>, llm: &HttpSettings) -> Result<Backend> {
        if let Some(p) = replay {
            return ReplayBackend::from_file(p)
                .map(Backend::Replay)
                .map_err(anyhow::Error::msg);
        }
        let settings = llm.clone().with_env();
        if settings.url.is_empty() {
            bail!(
                "no chat backend: pass replay scripts, or set [llm].url in the config or {}",
                flexloc::llm::ENV_URL
            );
        }
        Ok(Backend::Http(HttpBackend::new(settings)?))
    }

    /// Warn when a replay script was not fully used.
    pub fn finish(&self) {
        if let Backend::Replay(r) = self {
            if let Err(e) = r.finish() {
                log::warn!("{e}");
            }
        }
    }
}

pub fn gateway(backend: Backend, cfg: &RunConfig) -> Gateway<Backend> {
    let g = Gateway::new(backend);
    match cfg.gateway.context_limit {
        Some(n) => g.with_context_limit(n),
        None => g,
    }
}

/// Split `technique=path`.
pub fn technique_file(spec: &str) -> Result<(String, PathBuf), String> {
    match spec.split_once('=') {
        Some((t, p)) if !t.trim().is_empty() && !p.is_empty() => Ok((t.trim().to_string(), PathBuf::from(p))),
        _ => Err(format!("expected TECHNIQUE=FILE, got `{spec}`")),
    }
}

/// Inputs of one bug.
#[derive(Default)]
pub struct BugFiles {
    pub bug: PathBuf,
    pub spectrum: Option<PathBuf>,
    pub ranked: Vec<(String, PathBuf)>,
    pub statements: Vec<(String, PathBuf)>,
    pub replay_sr: Option<PathBuf>,
    pub replay_lr: Option<PathBuf>,
}

pub struct LoadedBug {
    pub info: BugInfo,
    pub spectrum: Option<CoverageSpectrum>,
    pub external: BTreeMap<String, RankedList>,
}

impl BugFiles {
    pub fn load(&self, index: &RepoIndex) -> Result<LoadedBug> {
        let info = load_bug_info(&self.bug)?;
        let spectrum = self.spectrum.as_deref().map(CoverageSpectrum::load).transpose()?;
        let mut external = BTreeMap::new();
        for (t, p) in &self.ranked {
            let list = RankedList::read_jsonl(p, Some(t)).with_context(|| format!("ranked list `{t}`"))?;
            insert_once(&mut external, t, list)?;
        }
        for (t, p) in &self.statements {
            let list = lift_statement_ranks(&read_statements(p)?, index, t);
            insert_once(&mut external, t, list)?;
        }
        Ok(LoadedBug {
            info,
            spectrum,
            external,
        })
    }
}

fn insert_once(lists: &mut BTreeMap<String, RankedList>, t: &str, list: RankedList) -> Result<()> {
    if lists.insert(t.to_string(), list).is_some() {
        bail!("technique `{t}` was given more than once");
    }
    Ok(())
}

/// Bugs of a batch directory. `<name>.json` is a bug; files named
/// `<name>.spectrum.json`, `<name>.sr.replay.json`, `<name>.lr.replay.json`,
/// `<name>.<technique>.statements.jsonl` and `<name>.<technique>.jsonl`
/// are its inputs.
pub fn discover(dir: &Path) -> Result<Vec<(String, BugFiles)>> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read bug directory {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .collect();
    names.sort();
    let mut bugs = Vec::new();
    for name in names
        .iter()
        .filter(|n| n.ends_with(".json") && n.matches('.').count() == 1)
    {
        let stem = name.trim_end_matches(".json");
        let mut files = BugFiles {
            bug: dir.join(name),
            ..BugFiles::default()
        };
        let prefix = format!("{stem}.");
        for other in names.iter().filter(|n| n.starts_with(&prefix) && *n != name) {
            let rest = &other[prefix.len()..];
            let path = dir.join(other);
            match rest {
                "spectrum.json" => files.spectrum = Some(path),
                "sr.replay.json" => files.replay_sr = Some(path),
                "lr.replay.json" => files.replay_lr = Some(path),
                _ => {
                    if let Some(t) = rest.strip_suffix(".statements.jsonl") {
                        files.statements.push((t.to_string(), path));
                    } else if let Some(t) = rest.strip_suffix(".jsonl").filter(|t| !t.contains('.')) {
                        files.ranked.push((t.to_string(), path));
                    } else {
                        log::warn!("ignoring {}", path.display());
                    }
                }
            }
        }
        bugs.push((stem.to_string(), files));
    }
    if bugs.is_empty() {
        return Err(anyhow!("no bug files (<name>.json) in {}", dir.display()));
    }
    Ok(bugs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn technique_specs() {
        assert_eq!(
            technique_file("ochiai=a/b.jsonl").unwrap(),
            ("ochiai".into(), PathBuf::from("a/b.jsonl"))
        );
        assert!(technique_file("ochiai").is_err());
        assert!(technique_file("=x").is_err());
    }

    #[test]
    fn batch_layout() {
        let d = tempfile::tempdir().unwrap();
        for f in [
            "Lang-1.json",
            "Lang-1.sr.replay.json",
            "Lang-1.ochiai.jsonl",
            "Lang-1.sbir.statements.jsonl",
            "Time-2.json",
            "Time-2.spectrum.json",
            "notes.txt",
        ] {
            std::fs::write(d.path().join(f), "").unwrap();
        }
        let bugs = discover(d.path()).unwrap();
        assert_eq!(bugs.len(), 2);
        let (name, lang) = &bugs[0];
        assert_eq!(name, "Lang-1");
        assert!(lang.replay_sr.is_some() && lang.replay_lr.is_none());
        assert_eq!(lang.ranked[0].0, "ochiai");
        assert_eq!(lang.statements[0].0, "sbir");
        assert!(bugs[1].1.spectrum.is_some());
    }
}
