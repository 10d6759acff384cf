use std::cell::RefCell;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{anyhow, bail, Context, Result};
use chutok::corpus::{CharacterInstance, GlyphLabel};
use chutok::detection::{load_detections, PrecomputedBoxes};
use chutok::postag::{evaluate_pos, load_bio, predict_collapsed, HmmTagger, PosExample, PosTag};
use chutok::recognition::{CharRecognizer, SubCharRecognizer};
use chutok::tokenizer::{
    calibrate_threshold, calibrate_token_accuracy, default_theta_grid, recognize_crop, tokenize_annotation,
    tokenize_slip_image, write_token_stream, CropRecognition, Token, TokenSequence, TokenizerConfig, TokenizerMode,
};
use chutok::vocab::Vocabulary;
use rayon::prelude::*;
use serde_json::json;

use super::{image_root, instance_images, load_corpus, slip_images, Ctx};
use crate::args::{CalibrateArgs, ModeArg, ObjectiveArg, TokenizeArgs};
use crate::run::write_json;

pub(super) fn tokenize(mut ctx: Ctx, a: &TokenizeArgs) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let cfg = TokenizerConfig {
        confidence_threshold: a.threshold,
        mode: match a.mode {
            ModeArg::Image => TokenizerMode::Image,
            ModeArg::Annotation => TokenizerMode::Annotation,
        },
        char_only: a.char_only,
    };
    let mut resolved = json!({ "tokenizer": cfg });

    let sequences: Vec<TokenSequence> = match a.mode {
        ModeArg::Annotation => {
            let path = a.manifest.as_ref().context("--manifest is required in annotation mode")?;
            let corpus = load_corpus(path)?;
            corpus
                .slips()
                .into_iter()
                .map(|(slip, instances)| {
                    let labels: Vec<GlyphLabel> = instances.iter().map(|i| i.label.clone()).collect();
                    tokenize_annotation(&slip, &labels, &vocab, &cfg).with_context(|| format!("slip {slip}"))
                })
                .collect::<Result<_>>()?
        }
        ModeArg::Image => {
            let dir = a.images.as_ref().context("--images is required in image mode")?;
            let char_rec = CharRecognizer::load(a.char_model.as_ref().context("--char-model is required")?)?;
            let sub_rec = SubCharRecognizer::load(a.subchar_model.as_ref().context("--subchar-model is required")?)?;
            let segmenter = a.segmenter.resolve().map_err(anyhow::Error::msg)?;
            let precomputed: Option<HashMap<String, PrecomputedBoxes>> = a
                .detections
                .as_ref()
                .map(|p| -> Result<_> {
                    Ok(load_detections(p)
                        .with_context(|| format!("reading {}", p.display()))?
                        .into_iter()
                        .map(|r| (r.slip_id, PrecomputedBoxes(r.boxes)))
                        .collect())
                })
                .transpose()?;
            resolved["segmenter"] = json!(segmenter);
            resolved["component_threshold"] = json!(sub_rec.threshold());
            slip_images(dir)?
                .par_iter()
                .map(|(id, img)| {
                    let seq = match &precomputed {
                        Some(boxes) => {
                            let detector = boxes.get(id).with_context(|| format!("no detections for slip {id}"))?;
                            tokenize_slip_image(id, img, detector, &char_rec, &sub_rec, &cfg)
                        }
                        None => tokenize_slip_image(id, img, &segmenter, &char_rec, &sub_rec, &cfg),
                    };
                    seq.with_context(|| format!("slip {id}"))
                })
                .collect::<Result<_>>()?
        }
    };

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut writer = BufWriter::new(file);
    write_token_stream(&sequences, &vocab, &mut writer)?;
    writer.flush()?;
    ctx.record(&a.out, resolved)?;

    let count = |pred: fn(&Token) -> bool| sequences.iter().flat_map(|s| &s.tokens).filter(|t| pred(t)).count();
    ctx.print(&json!({
        "slips": sequences.len(),
        "tokens": count(|_| true),
        "char_tokens": count(Token::is_char),
        "sub_char_tokens": count(Token::is_sub_char),
        "unknown_tokens": count(|t| matches!(t, Token::Unknown)),
    }))?;
    Ok(0)
}

pub(super) fn calibrate(mut ctx: Ctx, a: &CalibrateArgs) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let char_rec = CharRecognizer::load(&a.char_model)?;
    let sub_rec = SubCharRecognizer::load(&a.subchar_model)?;
    let corpus = load_corpus(&a.manifest)?;
    let grid = if a.grid.is_empty() { default_theta_grid() } else { a.grid.clone() };

    let instances: Vec<&CharacterInstance> = corpus.iter().collect();
    let images = instance_images(&instances, &image_root(&a.manifest, &a.data))?;
    let crops: Vec<CropRecognition> = images
        .par_iter()
        .zip(&instances)
        .map(|(img, inst)| recognize_crop(img, &char_rec, &sub_rec).with_context(|| format!("instance {}", inst.id)))
        .collect::<Result<_>>()?;

    let calibration = match a.objective {
        ObjectiveArg::TokenAccuracy => {
            let gold: Vec<GlyphLabel> = instances.iter().map(|i| i.label.clone()).collect();
            calibrate_token_accuracy(&crops, &gold, &vocab, &grid)?
        }
        ObjectiveArg::PosF1 => {
            let bio = a.bio.as_ref().context("--bio is required for pos-f1")?;
            let tagger = HmmTagger::load(a.tagger.as_ref().context("--tagger is required for pos-f1")?)?;
            let sentences = load_bio(bio).with_context(|| format!("reading {}", bio.display()))?;
            let position: HashMap<&str, usize> = instances.iter().enumerate().map(|(i, inst)| (inst.id.as_str(), i)).collect();
            let slips: Vec<Vec<usize>> = corpus
                .slips()
                .values()
                .map(|group| group.iter().map(|inst| position[inst.id.as_str()]).collect())
                .collect();
            if slips.len() != sentences.len() {
                bail!("{} slips in the manifest but {} sentences in {}", slips.len(), sentences.len(), bio.display());
            }
            for (k, (slip, sentence)) in slips.iter().zip(&sentences).enumerate() {
                if slip.len() != sentence.len() {
                    bail!("sentence {} has {} tokens but its slip has {} characters", k + 1, sentence.len(), slip.len());
                }
            }
            let gold: Vec<Vec<PosTag>> = sentences.iter().map(|s| s.tags()).collect();
            let propagation = a.propagation.into();
            let failure = RefCell::new(None);
            let cal = calibrate_threshold(&grid, |theta| {
                let result = (|| -> Result<f64> {
                    let examples = slips
                        .iter()
                        .zip(&gold)
                        .map(|(slip, tags)| {
                            let tokens = slip.iter().map(|&i| crops[i].token(theta, false)).collect();
                            PosExample::new(tokens, tags, &vocab)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let predicted = predict_collapsed(&tagger, &examples, &vocab, propagation)?;
                    Ok(evaluate_pos(&predicted, &gold)?.micro.f1)
                })();
                result.unwrap_or_else(|e| {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                })
            })?;
            if let Some(e) = failure.into_inner() {
                return Err(anyhow!(e).context("evaluating POS F1"));
            }
            cal
        }
    };

    let report = json!({
        "objective": a.objective,
        "best": calibration.best,
        "curve": calibration.curve,
    });
    write_json(&a.out, &report)?;
    ctx.record(&a.out, json!({ "grid": grid }))?;
    ctx.print(&report)?;
    Ok(0)
}
