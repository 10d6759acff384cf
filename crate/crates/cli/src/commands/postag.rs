use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chutok::postag::{
    collapse_predictions, evaluate_pos_sentences, expand_examples, expand_sentence, load_bio, write_bio, HmmTagger,
    PosExample, TaggedSentence,
};
use chutok::tokenizer::read_token_stream;
use chutok::vocab::Vocabulary;
use rayon::prelude::*;
use serde_json::json;

use super::Ctx;
use crate::args::{EvalPosArgs, ExpandPosArgs, TagArgs, TrainTaggerArgs};

fn read_bio_file(path: &Path) -> Result<Vec<TaggedSentence>> {
    load_bio(path).with_context(|| format!("reading {}", path.display()))
}

fn save_bio(path: &Path, sentences: &[TaggedSentence]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    write_bio(sentences, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub(super) fn expand_pos(mut ctx: Ctx, a: &ExpandPosArgs) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let sentences = read_bio_file(&a.bio)?;
    let examples: Vec<PosExample> = match &a.tokens {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let sequences = read_token_stream(BufReader::new(file), &vocab)?;
            if sequences.len() != sentences.len() {
                bail!("{} token sequences but {} sentences", sequences.len(), sentences.len());
            }
            sequences
                .into_iter()
                .zip(&sentences)
                .enumerate()
                .map(|(k, (seq, s))| {
                    PosExample::new(seq.tokens, &s.tags(), &vocab).with_context(|| format!("sentence {}", k + 1))
                })
                .collect::<Result<_>>()?
        }
        None => sentences
            .iter()
            .enumerate()
            .map(|(k, s)| PosExample::from_annotation(s, &vocab, a.char_only).with_context(|| format!("sentence {}", k + 1)))
            .collect::<Result<_>>()?,
    };
    let expanded = expand_examples(&examples, &vocab, a.propagation.into())?;
    save_bio(&a.out, &expanded)?;
    ctx.record(&a.out, json!({}))?;
    ctx.print(&json!({
        "sentences": expanded.len(),
        "tokens_in": sentences.iter().map(TaggedSentence::len).sum::<usize>(),
        "tokens_out": expanded.iter().map(TaggedSentence::len).sum::<usize>(),
    }))?;
    Ok(0)
}

pub(super) fn train_tagger(mut ctx: Ctx, a: &TrainTaggerArgs) -> Result<i32> {
    let sentences = read_bio_file(&a.bio)?;
    let tagger = HmmTagger::train(&sentences)?;
    tagger.save(&a.out)?;
    ctx.record(&a.out, json!({}))?;
    ctx.print(&json!({
        "sentences": sentences.len(),
        "vocabulary": tagger.vocabulary_size(),
    }))?;
    Ok(0)
}

pub(super) fn tag(mut ctx: Ctx, a: &TagArgs) -> Result<i32> {
    let tagger = HmmTagger::load(&a.tagger)?;
    let vocab = Vocabulary::load(&a.vocab)?;
    let sentences = read_bio_file(&a.bio)?;
    let propagation = a.propagation.into();
    let tagged: Vec<TaggedSentence> = sentences
        .par_iter()
        .enumerate()
        .map(|(k, s)| -> Result<TaggedSentence> {
            let ex = PosExample::from_annotation(s, &vocab, a.char_only).with_context(|| format!("sentence {}", k + 1))?;
            let expanded = expand_sentence(&ex.gold, &ex.tokens, &vocab, propagation)?;
            let predicted = tagger.tag(&expanded.surfaces());
            if a.expanded {
                let surfaces = expanded.tokens.iter().map(|t| t.surface.clone());
                return Ok(TaggedSentence::new(surfaces.zip(predicted).collect()));
            }
            let collapsed = collapse_predictions(&expanded, &predicted)?;
            Ok(TaggedSentence::new(
                s.tokens.iter().map(|(w, _)| w.clone()).zip(collapsed).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    save_bio(&a.out, &tagged)?;
    ctx.record(&a.out, json!({}))?;
    ctx.print(&json!({ "sentences": tagged.len() }))?;
    Ok(0)
}

pub(super) fn eval_pos(mut ctx: Ctx, a: &EvalPosArgs) -> Result<i32> {
    let gold = read_bio_file(&a.gold)?;
    let pred = read_bio_file(&a.pred)?;
    let report = evaluate_pos_sentences(&pred, &gold)?;
    ctx.report(&report, a.out.as_deref(), json!({}))?;
    Ok(0)
}
