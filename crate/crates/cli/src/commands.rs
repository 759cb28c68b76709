use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use op_reward::api::{self, MatchRequest, ReferenceInput, ScoreRequest};
use op_reward::embedding::{mask_prompt_keywords, MaskingConfig};
use op_reward::eval::{self, ProtocolCase, SyntheticSpec};
use op_reward::format::parse_response;
use op_reward::matching::matcher;
use op_reward::perspective::{write_jsonl, PerspectiveSet};
use op_reward::pipeline::{self, JudgeOptions, JudgePanel, RefineOptions};
use op_reward::reward::score_group;
use op_reward::templates;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::{setup, Cli, CommonArgs, Command, LlmArgs, UsageError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptFile {
    prompt: String,
    references: Vec<ReferenceInput>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ResponseLine {
    Text(String),
    Object { response: String },
}

impl ResponseLine {
    fn into_text(self) -> String {
        match self {
            ResponseLine::Text(t) | ResponseLine::Object { response: t } => t,
        }
    }
}

/// Reads a JSON document, reporting the failing field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| anyhow::anyhow!("{}: at {}: {}", path.display(), e.path(), e.inner()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    op_reward::perspective::read_jsonl(path).with_context(|| format!("reading {}", path.display()))
}

fn write_texts(out: &mut dyn Write, texts: BTreeSet<String>) -> Result<()> {
    for t in texts {
        writeln!(out, "{}", serde_json::to_string(&t)?)?;
    }
    Ok(())
}

fn judge_options(llm: &LlmArgs, common: &CommonArgs) -> JudgeOptions {
    JudgeOptions {
        max_attempts: llm.max_attempts,
        parallelism: common.workers.max(1),
        ..JudgeOptions::default()
    }
}

fn raw_explanations(rows: &[PerspectiveSet]) -> BTreeSet<String> {
    rows.iter().flat_map(|r| r.explanations()).collect()
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let common = cli.common;
    match cli.command {
        Command::Score {
            request,
            prompt_file,
            responses,
            advantages,
            emit_texts,
        } => score(&common, request.as_deref(), prompt_file.as_deref(), responses.as_deref(), advantages, emit_texts),
        Command::Match { input, matcher } => {
            let mut req: MatchRequest = read_json(&input)?;
            if common.tau.is_some() {
                req.tau = common.tau;
            }
            if matcher.is_some() {
                req.matcher = matcher;
            }
            let cfg = setup::reward_config(&common)?;
            let result = api::match_scores(&req, &cfg)?;
            let mut out = setup::output(common.out.as_deref())?;
            writeln!(out, "{}", api::to_wire(&result)?)?;
            out.flush()?;
            Ok(())
        }
        Command::Refine {
            input,
            llm,
            threshold,
            report,
            emit_texts,
        } => {
            let rows: Vec<PerspectiveSet> = read_jsonl(&input)?;
            let mut out = setup::output(common.out.as_deref())?;
            if emit_texts {
                write_texts(&mut out, raw_explanations(&rows))?;
                return Ok(out.flush()?);
            }
            let provider = setup::provider(&common)?;
            let llm_setup = setup::llm(&llm)?;
            let panel = JudgePanel::new(llm_setup.client(), judge_options(&llm, &common))?;
            let opts = RefineOptions {
                stage1_threshold: threshold,
            };
            let (refined, summary) = pipeline::refine(&rows, provider.as_ref(), &panel, llm_setup.client(), &opts)?;
            llm_setup.finish()?;
            write_jsonl(&mut out, &refined)?;
            out.flush()?;
            log::info!(
                "refine: {} rows in, {} kept, {} augmented, {} dropped",
                summary.input,
                summary.kept,
                summary.augmented,
                summary.dropped
            );
            if let Some(path) = report {
                fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Triplets { input, llm, emit_texts } => {
            let rows: Vec<PerspectiveSet> = read_jsonl(&input)?;
            let mut out = setup::output(common.out.as_deref())?;
            if emit_texts {
                write_texts(&mut out, raw_explanations(&rows))?;
                return Ok(out.flush()?);
            }
            let provider = setup::provider(&common)?;
            let llm_setup = setup::llm(&llm)?;
            let panel = JudgePanel::new(llm_setup.client(), judge_options(&llm, &common))?;
            let mut triplets = Vec::new();
            for row in &rows {
                if row.len() < 3 {
                    log::warn!("row {}: {} perspectives, skipped", row.row_id, row.len());
                    continue;
                }
                triplets.extend(pipeline::build_triplets(row, &panel, provider.as_ref())?);
            }
            llm_setup.finish()?;
            write_jsonl(&mut out, &triplets)?;
            Ok(out.flush()?)
        }
        Command::EvalProtocol {
            cases,
            matcher: name,
            emit_texts,
        } => {
            let cfg = setup::reward_config(&common)?;
            let cases: Vec<ProtocolCase> = read_jsonl(&cases)?;
            let mut out = setup::output(common.out.as_deref())?;
            if emit_texts {
                let texts = cases
                    .iter()
                    .flat_map(|c| {
                        let mut t = mask_prompt_keywords(&c.question, &c.candidates, &cfg.masking);
                        t.extend(mask_prompt_keywords(&c.question, &c.references, &cfg.masking));
                        t
                    })
                    .collect();
                write_texts(&mut out, texts)?;
                return Ok(out.flush()?);
            }
            let m = matcher(&name).map_err(|e| UsageError(e.to_string()))?;
            let provider = setup::provider(&common)?;
            let report = eval::run_protocol(&cases, m.as_ref(), cfg.tau_match, &cfg.masking, provider.as_ref())?;
            eval::write_report_csv(&mut out, &report)?;
            Ok(out.flush()?)
        }
        Command::Sweep {
            cases,
            matcher: name,
            grid,
        } => {
            let cfg = setup::reward_config(&common)?;
            let cases: Vec<ProtocolCase> = read_jsonl(&cases)?;
            let m = matcher(&name).map_err(|e| UsageError(e.to_string()))?;
            let provider = setup::provider(&common)?;
            let grid = grid.unwrap_or_else(eval::default_tau_grid);
            let sweep = eval::threshold_sweep(&cases, m.as_ref(), &grid, &cfg.masking, provider.as_ref())?;
            let mut out = setup::output(common.out.as_deref())?;
            eval::write_sweep_csv(&mut out, &sweep)?;
            Ok(out.flush()?)
        }
        Command::Serve { bind } => {
            let cfg = setup::reward_config(&common)?;
            let provider = setup::provider(&common)?;
            provider
                .health_check()
                .context("embedding provider failed its startup health check")?;
            crate::server::serve_blocking(&bind, provider, cfg, common.workers.max(1))
        }
        Command::Templates { name } => {
            let mut out = setup::output(common.out.as_deref())?;
            match name {
                Some(n) => out.write_all(templates::by_name(&n).map_err(|e| UsageError(e.to_string()))?.as_bytes())?,
                None => {
                    for (n, _) in templates::ALL {
                        writeln!(out, "{n}")?;
                    }
                }
            }
            Ok(out.flush()?)
        }
        Command::Synth {
            cases_per_subtask,
            unsolvable,
            correct_sim,
            distractor_sim,
            noise,
            store_out,
        } => {
            let cfg = setup::reward_config(&common)?;
            let spec = SyntheticSpec {
                cases_per_subtask,
                unsolvable_per_subtask: unsolvable,
                correct_sim,
                distractor_sim,
                noise,
                masking: cfg.masking,
                ..SyntheticSpec::default()
            };
            let suite = eval::synthetic_suite(&spec, common.seed).map_err(|e| UsageError(e.to_string()))?;
            let mut out = setup::output(common.out.as_deref())?;
            write_jsonl(&mut out, &suite.cases)?;
            out.flush()?;
            let mut store = setup::output(Some(&store_out))?;
            suite.store.write(&mut store)?;
            Ok(store.flush()?)
        }
    }
}

fn score(
    common: &CommonArgs,
    request: Option<&Path>,
    prompt_file: Option<&Path>,
    responses: Option<&Path>,
    advantages: bool,
    emit_texts: bool,
) -> Result<()> {
    let base = setup::reward_config(common)?;
    let mut out = setup::output(common.out.as_deref())?;
    let req: ScoreRequest = match (request, prompt_file, responses) {
        (Some(path), _, _) => {
            let mut req: ScoreRequest = read_json(path)?;
            req.want_advantages |= advantages;
            req
        }
        (None, Some(p), Some(r)) => {
            let prompt: PromptFile = read_json(p)?;
            let lines: Vec<ResponseLine> = read_jsonl(r)?;
            ScoreRequest {
                prompt: prompt.prompt,
                references: prompt.references,
                responses: lines.into_iter().map(ResponseLine::into_text).collect(),
                config_overrides: Default::default(),
                want_advantages: advantages,
            }
        }
        _ => return Err(UsageError("score needs --request, or --prompt-file with --responses".into()).into()),
    };
    if emit_texts {
        let cfg = base.with_overrides(&req.config_overrides);
        write_texts(&mut out, score_texts(&req, &cfg.masking))?;
        return Ok(out.flush()?);
    }
    let provider = setup::provider(common)?;
    if request.is_some() {
        let resp = api::score(&req, &base, provider.as_ref())?;
        writeln!(out, "{}", api::to_wire(&resp)?)?;
    } else {
        if req.references.is_empty() {
            return Err(op_reward::Error::EmptyInput("references").into());
        }
        let breakdowns = score_group(&req.prompt, &req.reference_set(), &req.responses, &base, provider.as_ref())?;
        for b in &breakdowns {
            writeln!(out, "{}", api::to_wire(b)?)?;
        }
    }
    Ok(out.flush()?)
}

/// Post-masking texts the scorer embeds for this request.
fn score_texts(req: &ScoreRequest, masking: &MaskingConfig) -> BTreeSet<String> {
    let refs = req.reference_set().explanations();
    let mut texts: BTreeSet<String> = mask_prompt_keywords(&req.prompt, &refs, masking).into_iter().collect();
    for r in &req.responses {
        let cands = parse_response(r).explanations();
        texts.extend(mask_prompt_keywords(&req.prompt, &cands, masking));
    }
    texts
}
