mod corpus;
mod postag;
mod recognition;
mod synthetic;
mod tokenize;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chutok::corpus::{load_manifest, CharacterInstance, Corpus};
use chutok::raster::{load_gray, GrayImage};
use chutok::recognition::{extract_features, FeatureVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::args::{Command, DataRoot};
use crate::query::resolve_image;
use crate::run::{beside, write_json, write_run_manifest};

pub use synthetic::label_surface;

/// Runs one parsed command; the returned value is the process exit code.
pub fn dispatch(command: &Command, out: &mut dyn Write) -> Result<i32> {
    let ctx = Ctx { command, out };
    match command {
        Command::Stats(a) => corpus::stats(ctx, a),
        Command::Validate(a) => corpus::validate(ctx, a),
        Command::Filter(a) => corpus::filter(ctx, a),
        Command::Split(a) => corpus::split(ctx, a),
        Command::BuildVocab(a) => corpus::build_vocab(ctx, a),
        Command::TrainRecognizer(a) => recognition::train_recognizer(ctx, a),
        Command::TrainSubchar(a) => recognition::train_subchar(ctx, a),
        Command::EvalDetection(a) => recognition::eval_detection(ctx, a),
        Command::EvalRecognition(a) => recognition::eval_recognition(ctx, a),
        Command::EvalSubchar(a) => recognition::eval_subchar(ctx, a),
        Command::Tokenize(a) => tokenize::tokenize(ctx, a),
        Command::Calibrate(a) => tokenize::calibrate(ctx, a),
        Command::ExpandPos(a) => postag::expand_pos(ctx, a),
        Command::TrainTagger(a) => postag::train_tagger(ctx, a),
        Command::Tag(a) => postag::tag(ctx, a),
        Command::EvalPos(a) => postag::eval_pos(ctx, a),
        Command::GenSynthetic(a) => synthetic::gen_synthetic(ctx, a),
        Command::Serve(a) => crate::server::serve_command(a),
    }
}

struct Ctx<'a> {
    command: &'a Command,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn print(&mut self, value: &impl Serialize) -> Result<()> {
        serde_json::to_writer_pretty(&mut *self.out, value)?;
        writeln!(self.out)?;
        Ok(())
    }

    /// Run manifest for a single output file.
    fn record(&self, output: &Path, resolved: Value) -> Result<()> {
        write_run_manifest(&beside(output), self.command, resolved)
    }

    /// Prints `report`, and when `out` is given also writes it with a run
    /// manifest.
    fn report(&mut self, report: &impl Serialize, out: Option<&Path>, resolved: Value) -> Result<()> {
        self.print(report)?;
        if let Some(path) = out {
            write_json(path, report)?;
            self.record(path, resolved)?;
        }
        Ok(())
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    load_manifest(path).with_context(|| format!("reading manifest {}", path.display()))
}

/// Directory that the manifest's image paths are relative to.
pub(crate) fn image_root(manifest: &Path, data: &DataRoot) -> PathBuf {
    match &data.data_root {
        Some(root) => root.clone(),
        None => manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    }
}

fn load_image(path: &Path) -> Result<GrayImage> {
    load_gray(path).with_context(|| format!("reading image {}", path.display()))
}

fn instance_images(instances: &[&CharacterInstance], root: &Path) -> Result<Vec<GrayImage>> {
    instances
        .par_iter()
        .map(|inst| load_image(&resolve_image(root, &inst.image_path)).with_context(|| format!("instance {}", inst.id)))
        .collect()
}

fn instance_features(instances: &[&CharacterInstance], root: &Path) -> Result<Vec<FeatureVector>> {
    instances
        .par_iter()
        .map(|inst| {
            let img = load_image(&resolve_image(root, &inst.image_path))?;
            extract_features(&img).with_context(|| format!("instance {}", inst.id))
        })
        .collect()
}

/// Slip images in a directory, keyed by file stem and sorted.
fn slip_images(dir: &Path) -> Result<Vec<(String, GrayImage)>> {
    let mut paths: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("png" | "jpg" | "jpeg")) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).context("non UTF-8 file name")?;
        paths.push((stem.to_string(), path.clone()));
    }
    paths.sort();
    if let Some(w) = paths.windows(2).find(|w| w[0].0 == w[1].0) {
        bail!("two images share the slip id {}", w[0].0);
    }
    paths
        .into_par_iter()
        .map(|(id, path)| Ok((id, load_image(&path)?)))
        .collect()
}
