mod config;
mod inputs;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use flexloc::agents::{self, FlexFlOutput, Stage1Output};
use flexloc::eval::{self, DEFAULT_TOP_N};
use flexloc::index::{build_index, load_index, save_index, RepoIndex};
use flexloc::ranking::RankedList;
use inputs::{gateway, technique_file, Backend, BugFiles};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Parser)]
#[command(
    name = "flexloc",
    version,
    about = "Two-stage LLM-assisted method-level fault localization"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index the Java sources under a directory.
    Index {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run both stages for one bug, or for every bug in a directory.
    Localize(LocalizeArgs),
    /// Space reduction only: write the fused candidate list.
    Stage1 {
        #[command(flatten)]
        bug: BugArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Also write the candidates as a JSON-lines ranked list.
        #[arg(long)]
        candidates_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localization refinement over a candidate list.
    Stage2 {
        #[arg(long)]
        bug: PathBuf,
        #[arg(long)]
        index: PathBuf,
        /// A JSON-lines ranked list, or the output of `stage1`.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        replay_lr: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score localization results against ground truth.
    Eval {
        /// Directory of `<bug>.json` outputs or `<bug>.jsonl` ranked lists.
        #[arg(long)]
        results: PathBuf,
        /// JSON lines of `{"bug_id", "buggy_methods"}`.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also report each project (bug-id prefix) separately.
        #[arg(long)]
        by_project: bool,
        /// Cut-offs for Top-N.
        #[arg(long = "top", value_delimiter = ',', default_values_t = DEFAULT_TOP_N)]
        top: Vec<usize>,
    },
    /// Walk through the bundled Time-25 example with scripted replies.
    Demo {
        /// Write the run output and evaluation report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the bundled repository and input files here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BugArgs {
    #[arg(long)]
    bug: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Coverage spectrum for SBFL.
    #[arg(long)]
    spectrum: Option<PathBuf>,
    /// Precomputed method ranking, as TECHNIQUE=FILE (repeatable).
    #[arg(long, value_parser = technique_file)]
    ranked: Vec<(String, PathBuf)>,
    /// Statement ranking lifted to methods, as TECHNIQUE=FILE (repeatable).
    #[arg(long, value_parser = technique_file)]
    ranked_statements: Vec<(String, PathBuf)>,
    /// Scripted replies for the search agent.
    #[arg(long)]
    replay_sr: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Independent agent runs to aggregate.
    #[arg(long)]
    repeat: Option<usize>,
    /// Methods each agent returns.
    #[arg(long)]
    k: Option<usize>,
    /// Function-call cap per agent run.
    #[arg(long)]
    max_calls: Option<usize>,
    /// Candidate-list length.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["bug", "bugs"])))]
struct LocalizeArgs {
    #[arg(long)]
    bug: Option<PathBuf>,
    /// Directory of bugs for batch mode.
    ///
    /// `<name>.json` is a bug and `<name>.spectrum.json`,
    /// `<name>.<technique>.jsonl`, `<name>.<technique>.statements.jsonl`,
    /// `<name>.sr.replay.json` and `<name>.lr.replay.json` its inputs.
    #[arg(long, conflicts_with_all = ["spectrum", "ranked", "ranked_statements", "replay_sr", "replay_lr"])]
    bugs: Option<PathBuf>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[arg(long, value_parser = technique_file)]
    ranked: Vec<(String, PathBuf)>,
    #[arg(long, value_parser = technique_file)]
    ranked_statements: Vec<(String, PathBuf)>,
    #[arg(long)]
    replay_sr: Option<PathBuf>,
    #[arg(long)]
    replay_lr: Option<PathBuf>,
    /// Bugs processed in parallel with `--bugs`.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    run: RunArgs,
    /// Output file, or directory with `--bugs`.
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        let f = &mut cfg.flexfl;
        if let Some(r) = self.repeat {
            f.pipeline.repetition_runs = r;
        }
        if let Some(k) = self.k {
            f.pipeline.k = k;
            f.fusion.k = k;
        }
        if let Some(n) = self.max_calls {
            f.pipeline.max_calls = n;
        }
        if let Some(m) = self.m {
            f.fusion.m = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_list(title: &str, list: &RankedList, limit: usize) {
    println!("{title}");
    for e in list.entries.iter().take(limit) {
        println!("  {:>2}. {}", e.rank, e.fqn);
    }
}

fn open_index(path: &Path) -> Result<RepoIndex> {
    Ok(load_index(path)?)
}

fn localize_one(files: &BugFiles, index: &RepoIndex, cfg: &RunConfig) -> Result<FlexFlOutput> {
    let bug = files.load(index)?;
    let sr = gateway(Backend::open(files.replay_sr.as_deref(), &cfg.llm)?, cfg);
    let lr = gateway(Backend::open(files.replay_lr.as_deref(), &cfg.llm)?, cfg);
    let out = agents::run_flexfl(
        &bug.info,
        index,
        bug.spectrum.as_ref(),
        &bug.external,
        &sr,
        &lr,
        &cfg.flexfl,
    )?;
    sr.backend().finish();
    lr.backend().finish();
    Ok(out)
}

fn localize(a: LocalizeArgs) -> Result<()> {
    let cfg = a.run.config()?;
    let index = open_index(&a.index)?;
    let Some(dir) = a.bugs else {
        let files = BugFiles {
            bug: a.bug.expect("clap requires --bug or --bugs"),
            spectrum: a.spectrum,
            ranked: a.ranked,
            statements: a.ranked_statements,
            replay_sr: a.replay_sr,
            replay_lr: a.replay_lr,
        };
        let out = localize_one(&files, &index, &cfg)?;
        for w in &out.stage1.warnings {
            log::warn!("{w}");
        }
        write_json(&a.out, &out)?;
        print_list("Final ranking:", out.final_list(), cfg.flexfl.pipeline.k);
        return Ok(());
    };

    if a.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let bugs = inputs::discover(&dir)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    let next = AtomicUsize::new(0);
    let workers = a.jobs.min(bugs.len());
    let mut outcomes: Vec<(usize, Result<FlexFlOutput>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        let Some((name, files)) = bugs.get(i) else { break };
                        log::info!("localizing {name}");
                        let r = localize_one(files, &index, &cfg)
                            .and_then(|o| write_json(&a.out.join(format!("{name}.json")), &o).map(|()| o));
                        done.push((i, r));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    outcomes.sort_by_key(|(i, _)| *i);
    let mut failed = 0;
    for (i, r) in outcomes {
        let name = &bugs[i].0;
        match r {
            Ok(o) => println!(
                "{name}: {}",
                o.final_list().entries.first().map_or("(no prediction)", |e| &e.fqn)
            ),
            Err(e) => {
                failed += 1;
                println!("{name}: error: {}", describe(&e));
            }
        }
    }
    if failed > 0 {
        bail!("{failed} of {} bug(s) failed", bugs.len());
    }
    Ok(())
}

fn load_candidates(path: &Path) -> Result<(RankedList, Option<Stage1Output>)> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return Ok((RankedList::read_jsonl(path, Some("candidates"))?, None));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let s1: Stage1Output =
        serde_json::from_str(&text).with_context(|| format!("{} is not a stage-1 output", path.display()))?;
    Ok((s1.candidates.clone(), Some(s1)))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { root, out } => {
            let build = build_index(&root)?;
            for w in &build.warnings {
                log::warn!("{}: {}", w.file, w.message);
            }
            save_index(&build.index, &out)?;
            println!(
                "indexed {} methods in {} classes ({} warning(s)) -> {}",
                build.index.methods().len(),
                build.index.class_fqns().len(),
                build.warnings.len(),
                out.display()
            );
        }
        Command::Localize(a) => localize(a)?,
        Command::Stage1 {
            bug,
            run,
            candidates_out,
            out,
        } => {
            let cfg = run.config()?;
            let index = open_index(&bug.index)?;
            let files = BugFiles {
                bug: bug.bug,
                spectrum: bug.spectrum,
                ranked: bug.ranked,
                statements: bug.ranked_statements,
                replay_sr: bug.replay_sr,
                replay_lr: None,
            };
            let loaded = files.load(&index)?;
            let sr = gateway(Backend::open(files.replay_sr.as_deref(), &cfg.llm)?, &cfg);
            let s1 = agents::stage1(
                &loaded.info,
                &index,
                loaded.spectrum.as_ref(),
                &loaded.external,
                &sr,
                &cfg.flexfl,
            )?;
            sr.backend().finish();
            for w in &s1.warnings {
                log::warn!("{w}");
            }
            write_json(&out, &s1)?;
            if let Some(p) = candidates_out {
                std::fs::write(&p, s1.candidates.to_jsonl())
                    .with_context(|| format!("cannot write {}", p.display()))?;
            }
            print_list("Candidates:", &s1.candidates, usize::MAX);
        }
        Command::Stage2 {
            bug,
            index,
            candidates,
            replay_lr,
            run,
            out,
        } => {
            let cfg = run.config()?;
            let index = open_index(&index)?;
            let info = flexloc::bug_input::load_bug_info(&bug)?;
            let (list, s1) = load_candidates(&candidates)?;
            let lr = gateway(Backend::open(replay_lr.as_deref(), &cfg.llm)?, &cfg);
            let s2 = agents::stage2(&info, &index, &list, &lr, &cfg.flexfl)?;
            lr.backend().finish();
            print_list("Final ranking:", &s2.final_list, cfg.flexfl.pipeline.k);
            match s1 {
                Some(stage1) => write_json(
                    &out,
                    &FlexFlOutput {
                        bug_id: info.bug_id,
                        stage1,
                        stage2: s2,
                    },
                )?,
                None => write_json(&out, &s2)?,
            }
        }
        Command::Eval {
            results,
            truth,
            out,
            by_project,
            top,
        } => {
            let truth = eval::load_truth(&truth)?;
            let results = eval::load_results(&results)?;
            let report = if by_project {
                eval::evaluate_grouped(&results, &truth, &top)?
            } else {
                eval::evaluate(&results, &truth, &top)?
            };
            println!("{}", eval::render_table(&report));
            if let Some(p) = out {
                write_json(&p, &report)?;
            }
        }
        Command::Demo { out, export } => {
            if let Some(dir) = export {
                flexloc::demo::export(&dir).with_context(|| format!("cannot export to {}", dir.display()))?;
                println!("exported demo inputs to {}", dir.display());
            }
            let run = flexloc::demo::run()?;
            println!("{}", flexloc::demo::walkthrough(&run));
            if let Some(dir) = out {
                write_json(&dir.join(format!("{}.json", flexloc::demo::BUG_ID)), &run.output)?;
                write_json(&dir.join("report.json"), &run.report)?;
            }
        }
    }
    Ok(())
}

/// The error chain joined by `: `, skipping causes the previous message
/// already ends with.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
