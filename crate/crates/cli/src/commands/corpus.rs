use std::fs;

use anyhow::{Context, Result};
use chutok::corpus::manifest::save_manifest;
use chutok::corpus::{self as core_corpus, filter_by_min_count, FilterConfig, SplitConfig};
use chutok::vocab::{build_vocabulary, coverage_report, parse_seed_list};
use serde_json::json;

use super::{load_corpus, Ctx};
use crate::args::{BuildVocabArgs, FilterArgs, SplitArgs, StatsArgs, ValidateArgs};
use crate::run::{write_json, write_run_manifest, RUN_MANIFEST_NAME};

pub(super) fn stats(mut ctx: Ctx, a: &StatsArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    ctx.report(&core_corpus::stats(&corpus), a.out.as_deref(), json!({}))?;
    Ok(0)
}

pub(super) fn validate(ctx: Ctx, a: &ValidateArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    let violations = core_corpus::validate(&corpus);
    for v in &violations {
        writeln!(ctx.out, "{v}")?;
    }
    writeln!(ctx.out, "{} instances, {} violations", corpus.len(), violations.len())?;
    Ok(if violations.is_empty() { 0 } else { 1 })
}

pub(super) fn filter(mut ctx: Ctx, a: &FilterArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    let cfg = FilterConfig::new(a.min_count as usize).context("min count must be at least 1")?;
    let kept = filter_by_min_count(&corpus, cfg, a.granularity.into());
    save_manifest(&kept, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    ctx.record(&a.out, json!({}))?;
    ctx.print(&json!({
        "instances_in": corpus.len(),
        "instances_out": kept.len(),
        "classes_in": corpus.class_counts().len(),
        "classes_out": kept.class_counts().len(),
    }))?;
    Ok(0)
}

pub(super) fn split(mut ctx: Ctx, a: &SplitArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    let cfg = SplitConfig {
        train: a.train,
        val: a.val,
        test: a.test,
        seed: a.seed,
    };
    let parts = core_corpus::split(&corpus, &cfg)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, part) in [("train", &parts.train), ("val", &parts.val), ("test", &parts.test)] {
        let path = a.out_dir.join(format!("{name}.jsonl"));
        save_manifest(part, &path).with_context(|| format!("writing {}", path.display()))?;
    }
    write_json(&a.out_dir.join("split_report.json"), &parts.report)?;
    write_run_manifest(&a.out_dir.join(RUN_MANIFEST_NAME), ctx.command, json!({ "split": cfg }))?;
    ctx.print(&json!({
        "train": parts.train.len(),
        "val": parts.val.len(),
        "test": parts.test.len(),
        "classes": parts.report.len(),
    }))?;
    Ok(0)
}

pub(super) fn build_vocab(mut ctx: Ctx, a: &BuildVocabArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    let seed = match &a.seed_list {
        Some(path) => parse_seed_list(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?),
        None => Vec::new(),
    };
    let vocab = build_vocabulary(&corpus, &seed)?;
    vocab.save(&a.out)?;
    ctx.record(
        &a.out,
        json!({
            "seed_components": vocab.seed_size(),
            "components": vocab.components().len(),
            "characters": vocab.characters().len(),
        }),
    )?;
    ctx.print(&coverage_report(&corpus, &vocab))?;
    Ok(0)
}
