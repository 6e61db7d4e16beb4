use anyhow::{bail, Context, Result};
use flexloc::agents::{FlexFlConfig, PromptSet};
use flexloc::llm::HttpSettings;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Gateway options beyond the connection itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    /// Reject requests whose estimated size exceeds this many tokens.
    pub context_limit: Option<usize>,
}

/// Everything a run reads from the config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub flexfl: FlexFlConfig,
    pub llm: HttpSettings,
    pub gateway: GatewayConfig,
    /// Directory of prompt templates overriding the built-in set.
    pub prompts_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<RunConfig> {
        let raw: toml::Table =
            toml::from_str(text).with_context(|| format!("invalid config file {}", origin.display()))?;
        if raw.get("llm").and_then(|l| l.get("api_key")).is_some() {
            bail!(
                "{}: API keys are read only from {}; remove llm.api_key",
                origin.display(),
                flexloc::llm::ENV_KEY
            );
        }
        let cfg: RunConfig = raw
            .try_into()
            .with_context(|| format!("invalid config file {}", origin.display()))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).with_context(|| format!("cannot read config file {}", p.display()))?;
                let mut cfg = RunConfig::parse(&text, p)?;
                if let Some(dir) = &cfg.prompts_dir {
                    if dir.is_relative() {
                        cfg.prompts_dir = Some(p.parent().unwrap_or(Path::new(".")).join(dir));
                    }
                }
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(dir) = &cfg.prompts_dir {
            cfg.flexfl.prompts = PromptSet::load_dir(dir).map_err(anyhow::Error::msg)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.flexfl
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::parse("", Path::new("c.toml")).unwrap();
        assert_eq!(cfg.flexfl, FlexFlConfig::default());
        assert_eq!(cfg.llm, HttpSettings::default());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
sbfl_formula = "dstar2"
output_cap = 4000

[pipeline]
max_calls = 6
repetition_runs = 5

[fusion]
m = 10
technique_order = ["ochiai", "sbir"]

[llm]
url = "http://localhost:8000/v1"
model = "m"

[gateway]
context_limit = 8192
"#;
        let cfg = RunConfig::parse(text, Path::new("c.toml")).unwrap();
        assert_eq!(cfg.flexfl.pipeline.max_calls, 6);
        assert_eq!(cfg.flexfl.pipeline.k, 5);
        assert_eq!(cfg.flexfl.fusion.m, 10);
        assert_eq!(cfg.flexfl.output_cap, 4000);
        assert_eq!(cfg.flexfl.sbfl_formula, flexloc::baseline::Formula::DStar2);
        assert_eq!(cfg.llm.model, "m");
        assert_eq!(cfg.gateway.context_limit, Some(8192));
    }

    #[test]
    fn documented_defaults_match() {
        let guide = include_str!("../../../book/src/configuration.md");
        let block = guide
            .split("```toml\n")
            .nth(1)
            .and_then(|rest| rest.split("```").next())
            .expect("toml block in the configuration chapter");
        let cfg = RunConfig::parse(block, Path::new("configuration.md")).unwrap();
        assert_eq!(cfg.flexfl, FlexFlConfig::default());
        assert_eq!(cfg.llm, HttpSettings::default());
        assert_eq!(cfg.gateway, GatewayConfig::default());
        assert_eq!(cfg.prompts_dir, None);
    }

    #[test]
    fn keys_in_the_file_are_refused() {
        let err = RunConfig::parse("[llm]\napi_key = \"sk\"", Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("FLEXLOC_LLM_KEY"));
    }
}
