use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chutok::corpus::manifest::save_manifest;
use chutok::corpus::{join_components, CharacterInstance, Corpus, GlyphLabel};
use chutok::detection::{write_detections, DetectionRecord};
use chutok::postag::synthetic::{generate_pos_corpus, PosSyntheticParams};
use chutok::postag::{write_bio, TaggedSentence};
use chutok::raster::{crop, encode_png, GrayImage};
use chutok::synth::{generate_glyph_instances, generate_synthetic_slip, GlyphSet, GlyphSetParams, GlyphStyle, SlipLayout};
use chutok::tokenizer::UNKNOWN_SURFACE;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::Ctx;
use crate::args::{GenSyntheticArgs, SyntheticKind};
use crate::run::{write_bytes, write_run_manifest, RUN_MANIFEST_NAME};

const SOURCE: &str = "synthetic";

/// A label written in token syntax, components in annotation order.
pub fn label_surface(label: &GlyphLabel) -> String {
    match label {
        GlyphLabel::Modern { text } => text.clone(),
        GlyphLabel::Components { items, .. } => format!("{{{}}}", join_components(items)),
        GlyphLabel::Unknown => UNKNOWN_SURFACE.to_string(),
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn glyph_set(a: &GenSyntheticArgs) -> Result<GlyphSet> {
    let params = GlyphSetParams {
        n_components: a.components,
        n_modern: a.modern,
        n_oov: a.oov,
        max_components_per_glyph: 3,
        seed: a.seed,
    };
    let max_k = params.max_components_per_glyph.min(params.n_components);
    let capacity: usize = (1..=max_k).map(|k| binomial(params.n_components, k)).sum();
    if a.components == 0 || a.modern + a.oov == 0 || a.modern + a.oov > capacity {
        bail!(
            "{} classes cannot be built from {} components (at most {capacity})",
            a.modern + a.oov,
            a.components
        );
    }
    Ok(GlyphSet::generate(&params))
}

fn write_png(path: &Path, img: &GrayImage) -> Result<()> {
    write_bytes(path, &encode_png(img)?)
}

fn write_seed_list(dir: &Path, set: &GlyphSet) -> Result<()> {
    let mut text = String::new();
    for name in set.component_names() {
        text.push_str(&name);
        text.push('\n');
    }
    write_bytes(&dir.join("seeds.txt"), text.as_bytes())
}

fn write_classes(dir: &Path, set: &GlyphSet) -> Result<()> {
    let classes: Vec<_> = set
        .classes
        .iter()
        .map(|c| json!({ "label": c.label, "components": c.component_names(set) }))
        .collect();
    crate::run::write_json(&dir.join("classes.json"), &classes)
}

pub(super) fn gen_synthetic(mut ctx: Ctx, a: &GenSyntheticArgs) -> Result<i32> {
    let dir = a.out_dir.as_path();
    let summary = match a.kind {
        SyntheticKind::Glyphs => glyphs(a, dir)?,
        SyntheticKind::Slips => slips(a, dir)?,
        SyntheticKind::Pos => pos(a, dir)?,
    };
    write_run_manifest(&dir.join(RUN_MANIFEST_NAME), ctx.command, json!({}))?;
    ctx.print(&summary)?;
    Ok(0)
}

fn glyphs(a: &GenSyntheticArgs, dir: &Path) -> Result<serde_json::Value> {
    if a.per_class == 0 {
        bail!("--per-class must be at least 1");
    }
    let set = glyph_set(a)?;
    let crops = generate_glyph_instances(&set, a.per_class, &GlyphStyle::default(), a.noise, a.seed);
    let mut instances = Vec::with_capacity(crops.len());
    for (n, (class, img)) in crops.iter().enumerate() {
        let i = n % a.per_class;
        let name = format!("g{class:03}-{i:03}");
        let image_path = format!("crops/{name}.png");
        write_png(&dir.join(&image_path), img)?;
        instances.push(CharacterInstance {
            id: name,
            image_path,
            source: SOURCE.into(),
            document: "glyphs".into(),
            slip: format!("c{class:03}"),
            reading_index: i as u32,
            bbox: None,
            label: set.classes[*class].label.clone(),
        });
    }
    save_manifest(&Corpus::new(instances), dir.join("manifest.jsonl"))?;
    write_seed_list(dir, &set)?;
    write_classes(dir, &set)?;
    Ok(json!({ "classes": set.classes.len(), "instances": crops.len() }))
}

fn slips(a: &GenSyntheticArgs, dir: &Path) -> Result<serde_json::Value> {
    if a.min_chars == 0 || a.min_chars > a.max_chars {
        bail!("need 1 <= --min-chars <= --max-chars");
    }
    let set = glyph_set(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let layout = SlipLayout::default();
    let mut instances = Vec::new();
    let mut gold = Vec::with_capacity(a.slips);
    for s in 0..a.slips {
        let n_chars = rng.random_range(a.min_chars..=a.max_chars);
        let slip = generate_synthetic_slip(&set, n_chars, &layout, a.noise, rng.random());
        let slip_id = format!("s{s:03}");
        write_png(&dir.join(format!("slips/{slip_id}.png")), &slip.image)?;
        for (j, (b, label)) in slip.boxes.iter().zip(&slip.labels).enumerate() {
            let (x, y, w, h) = b.pixel_rect();
            let region = crop(&slip.image, x, y, w, h).context("gold box outside the slip")?;
            let id = format!("{slip_id}-{j:02}");
            let image_path = format!("crops/{id}.png");
            write_png(&dir.join(&image_path), &region)?;
            instances.push(CharacterInstance {
                id,
                image_path,
                source: SOURCE.into(),
                document: "slips".into(),
                slip: slip_id.clone(),
                reading_index: j as u32,
                bbox: Some(*b),
                label: label.clone(),
            });
        }
        gold.push(DetectionRecord {
            slip_id,
            boxes: slip.boxes,
        });
    }
    let file = File::create(dir.join("detections.jsonl"))?;
    let mut writer = BufWriter::new(file);
    write_detections(&gold, &mut writer)?;
    writer.flush()?;
    let n = instances.len();
    save_manifest(&Corpus::new(instances), dir.join("manifest.jsonl"))?;
    write_seed_list(dir, &set)?;
    write_classes(dir, &set)?;
    Ok(json!({ "slips": a.slips, "instances": n }))
}

fn pos(a: &GenSyntheticArgs, dir: &Path) -> Result<serde_json::Value> {
    let params = PosSyntheticParams {
        n_sentences: a.sentences,
        oov_probability: a.oov_probability,
        seed: a.seed,
        ..PosSyntheticParams::default()
    };
    let corpus = generate_pos_corpus(&params);
    let sentences: Vec<TaggedSentence> = corpus
        .sentences
        .iter()
        .map(|s| TaggedSentence::new(s.labels.iter().map(label_surface).zip(s.tags.iter().copied()).collect()))
        .collect();
    let n_train = (a.train_fraction * sentences.len() as f64).round() as usize;
    for (name, part) in [("train.bio", &sentences[..n_train]), ("test.bio", &sentences[n_train..])] {
        let mut buf = Vec::new();
        write_bio(part, &mut buf)?;
        write_bytes(&dir.join(name), &buf)?;
    }
    corpus.vocab.save(dir.join("vocab.json"))?;
    Ok(json!({
        "train_sentences": n_train,
        "test_sentences": sentences.len() - n_train,
        "oov_rate": corpus.oov_rate(),
    }))
}
