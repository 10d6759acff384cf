use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context, Result};
use chutok::corpus::{CharacterInstance, Corpus, GlyphLabel};
use chutok::detection::{
    evaluate_detection_batch, load_detections, segment_slip, write_detections, BoundingBox, DetectionEvalConfig,
    DetectionRecord,
};
use chutok::recognition::external::{load_external_scores, ExternalRecord};
use chutok::recognition::{
    evaluate_multilabel, fit_char_recognizer, fit_component_recognizer, top_k_accuracy, CharRecognizer,
    ComponentExample, RankedPrediction, SubCharRecognizer, DEFAULT_COMPONENT_THRESHOLD,
};
use chutok::vocab::{ComponentId, Decomposition, Vocabulary};
use rayon::prelude::*;
use serde_json::json;

use super::{image_root, instance_features, load_corpus, slip_images, Ctx};
use crate::args::{EvalDetectionArgs, EvalRecognitionArgs, EvalSubcharArgs, TrainRecognizerArgs, TrainSubcharArgs};

fn modern_instances(corpus: &Corpus) -> Vec<&CharacterInstance> {
    corpus
        .iter()
        .filter(|i| matches!(i.label, GlyphLabel::Modern { .. }))
        .collect()
}

/// Components-kind instances with their gold component ids.
fn component_instances<'a>(corpus: &'a Corpus, vocab: &Vocabulary) -> Result<Vec<(&'a CharacterInstance, Vec<ComponentId>)>> {
    let mut out = Vec::new();
    for inst in corpus {
        if !matches!(inst.label, GlyphLabel::Components { .. }) {
            continue;
        }
        match vocab.decompose(&inst.label).with_context(|| format!("instance {}", inst.id))? {
            Decomposition::Components(ids) => out.push((inst, ids)),
            _ => unreachable!("components label decomposes to components"),
        }
    }
    Ok(out)
}

pub(super) fn train_recognizer(mut ctx: Ctx, a: &TrainRecognizerArgs) -> Result<i32> {
    let corpus = load_corpus(&a.manifest)?;
    let root = image_root(&a.manifest, &a.data);
    let instances = modern_instances(&corpus);
    let features = instance_features(&instances, &root)?;
    let examples: Vec<(String, &_)> = instances.iter().map(|i| i.label.class_key()).zip(&features).collect();
    let model = fit_char_recognizer(&examples, None, a.temperature)?;
    model.save(&a.out)?;
    ctx.record(&a.out, json!({ "image_root": root }))?;
    ctx.print(&json!({
        "classes": model.classes().len(),
        "instances": instances.len(),
        "skipped_oov": corpus.len() - instances.len(),
    }))?;
    Ok(0)
}

pub(super) fn train_subchar(mut ctx: Ctx, a: &TrainSubcharArgs) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let root = image_root(&a.manifest, &a.data);

    let corpus = load_corpus(&a.manifest)?;
    let train = component_instances(&corpus, &vocab)?;
    let train_refs: Vec<_> = train.iter().map(|(i, _)| *i).collect();
    let train_features = instance_features(&train_refs, &root)?;
    let train_examples: Vec<ComponentExample> = train
        .iter()
        .zip(&train_features)
        .map(|((_, ids), f)| (ids.as_slice(), f))
        .collect();

    let val_corpus = a.validation.as_deref().map(load_corpus).transpose()?;
    let val = match &val_corpus {
        Some(c) => component_instances(c, &vocab)?,
        None => Vec::new(),
    };
    let val_root = a
        .validation
        .as_deref()
        .map(|p| image_root(p, &a.data))
        .unwrap_or_else(|| root.clone());
    let val_refs: Vec<_> = val.iter().map(|(i, _)| *i).collect();
    let val_features = instance_features(&val_refs, &val_root)?;
    let val_examples: Vec<ComponentExample> = val
        .iter()
        .zip(&val_features)
        .map(|((_, ids), f)| (ids.as_slice(), f))
        .collect();

    let fit = fit_component_recognizer(&train_examples, &vocab, a.validation.as_ref().map(|_| val_examples.as_slice()))?;
    fit.recognizer.save(&a.out)?;
    let excluded: Vec<&str> = fit.excluded.iter().filter_map(|&id| vocab.component(id)).collect();
    ctx.record(
        &a.out,
        json!({ "image_root": root, "threshold": fit.recognizer.threshold() }),
    )?;
    ctx.print(&json!({
        "components": fit.recognizer.components().len(),
        "excluded": excluded,
        "threshold": fit.recognizer.threshold(),
        "calibration": fit.calibration,
        "train_instances": train.len(),
        "validation_instances": val.len(),
    }))?;
    Ok(0)
}

pub(super) fn eval_detection(mut ctx: Ctx, a: &EvalDetectionArgs) -> Result<i32> {
    let cfg = DetectionEvalConfig::new(a.iou).context("IoU threshold must lie in (0, 1]")?;
    let gold = load_detections(&a.gold).with_context(|| format!("reading {}", a.gold.display()))?;
    let segmenter = a.segmenter.resolve().map_err(anyhow::Error::msg)?;
    let predicted = match (&a.pred, &a.images) {
        (Some(path), _) => load_detections(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(dir)) => slip_images(dir)?
            .par_iter()
            .map(|(id, img)| DetectionRecord {
                slip_id: id.clone(),
                boxes: segment_slip(img, &segmenter),
            })
            .collect(),
        (None, None) => bail!("either --pred or --images is required"),
    };
    if let Some(path) = &a.write_pred {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_detections(&predicted, BufWriter::new(file))?;
        ctx.record(path, json!({ "segmenter": segmenter }))?;
    }

    let by_slip: HashMap<&str, &[BoundingBox]> = predicted.iter().map(|r| (r.slip_id.as_str(), r.boxes.as_slice())).collect();
    let gold_ids: HashSet<&str> = gold.iter().map(|r| r.slip_id.as_str()).collect();
    let extra: Vec<&DetectionRecord> = predicted.iter().filter(|r| !gold_ids.contains(r.slip_id.as_str())).collect();
    // Slips missing from the predictions count as empty; extra slips are all false positives.
    let pairs = gold
        .iter()
        .map(|g| (by_slip.get(g.slip_id.as_str()).copied().unwrap_or(&[]), g.boxes.as_slice()))
        .chain(extra.iter().map(|r| (r.boxes.as_slice(), &[][..])));
    let scores = evaluate_detection_batch(pairs, &cfg);
    let report = json!({
        "iou_threshold": cfg.iou_threshold,
        "slips": gold.len(),
        "predicted_slips_without_gold": extra.iter().map(|r| &r.slip_id).collect::<Vec<_>>(),
        "scores": scores,
    });
    ctx.report(&report, a.out.as_deref(), json!({ "segmenter": segmenter }))?;
    Ok(0)
}

fn external_by_id(path: &std::path::Path) -> Result<HashMap<String, ExternalRecord>> {
    Ok(load_external_scores(path)
        .with_context(|| format!("reading {}", path.display()))?
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect())
}

pub(super) fn eval_recognition(mut ctx: Ctx, a: &EvalRecognitionArgs) -> Result<i32> {
    if a.k.contains(&0) {
        bail!("k must be at least 1");
    }
    let corpus = load_corpus(&a.manifest)?;
    let instances = modern_instances(&corpus);
    let gold: Vec<String> = instances.iter().map(|i| i.label.class_key()).collect();
    let predictions: Vec<RankedPrediction> = match (&a.model, &a.external) {
        (Some(path), _) => {
            let model = CharRecognizer::load(path)?;
            let root = image_root(&a.manifest, &a.data);
            instance_features(&instances, &root)?
                .par_iter()
                .map(|f| model.recognize(f))
                .collect()
        }
        (None, Some(path)) => {
            let records = external_by_id(path)?;
            instances
                .iter()
                .map(|inst| {
                    let record = records.get(&inst.id).with_context(|| format!("no scores for instance {}", inst.id))?;
                    record
                        .ranking()
                        .cloned()
                        .with_context(|| format!("instance {} has component scores, not class scores", inst.id))
                })
                .collect::<Result<_>>()?
        }
        (None, None) => bail!("either --model or --external is required"),
    };
    let top_k: Vec<_> = top_k_accuracy(&predictions, &gold, &a.k)
        .into_iter()
        .map(|(k, acc)| json!({ "k": k, "accuracy": acc }))
        .collect();
    let report = json!({
        "instances": instances.len(),
        "skipped_oov": corpus.len() - instances.len(),
        "top_k": top_k,
    });
    ctx.report(&report, a.out.as_deref(), json!({}))?;
    Ok(0)
}

pub(super) fn eval_subchar(mut ctx: Ctx, a: &EvalSubcharArgs) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let corpus = load_corpus(&a.manifest)?;
    let instances = component_instances(&corpus, &vocab)?;
    let gold: Vec<Vec<ComponentId>> = instances.iter().map(|(_, ids)| ids.clone()).collect();
    let (threshold, predicted): (f64, Vec<Vec<ComponentId>>) = match (&a.model, &a.external) {
        (Some(path), _) => {
            let mut model = SubCharRecognizer::load(path)?;
            if let Some(t) = a.threshold {
                model = model.with_threshold(t)?;
            }
            let refs: Vec<_> = instances.iter().map(|(i, _)| *i).collect();
            let features = instance_features(&refs, &image_root(&a.manifest, &a.data))?;
            let predicted = features
                .par_iter()
                .map(|f| model.recognize(f).into_iter().map(|s| s.id).collect())
                .collect();
            (model.threshold(), predicted)
        }
        (None, Some(path)) => {
            let threshold = a.threshold.unwrap_or(DEFAULT_COMPONENT_THRESHOLD);
            let records = external_by_id(path)?;
            let predicted = instances
                .iter()
                .map(|(inst, _)| {
                    let record = records.get(&inst.id).with_context(|| format!("no scores for instance {}", inst.id))?;
                    let selected = record
                        .components(threshold)
                        .with_context(|| format!("instance {} has class scores, not component scores", inst.id))?;
                    Ok(selected.into_iter().map(|s| s.id).collect())
                })
                .collect::<Result<_>>()?;
            (threshold, predicted)
        }
        (None, None) => bail!("either --model or --external is required"),
    };
    let report = evaluate_multilabel(&predicted, &gold);
    let names: BTreeMap<ComponentId, &str> = report
        .per_component
        .keys()
        .filter_map(|&id| vocab.component(id).map(|n| (id, n)))
        .collect();
    let out = json!({
        "threshold": threshold,
        "skipped": corpus.len() - instances.len(),
        "component_names": names,
        "report": report,
    });
    ctx.report(&out, a.out.as_deref(), json!({ "threshold": threshold }))?;
    Ok(0)
}
