use std::net::SocketAddr;
use std::path::PathBuf;

use chutok::corpus::Granularity;
use chutok::detection::SegmenterParams;
use chutok::postag::Propagation;
use chutok::recognition::DEFAULT_TEMPERATURE;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Environment variable naming the directory that manifest image paths are
/// relative to.
pub const DATA_ROOT_ENV: &str = "CHUTOK_DATA_ROOT";

#[derive(Debug, Parser)]
#[command(name = "chutok", version, about = "Slip-scan tokenization and evaluation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Corpus statistics as JSON.
    Stats(StatsArgs),
    /// Check manifest invariants; exits 1 on any violation.
    Validate(ValidateArgs),
    /// Drop classes or components seen fewer than k times.
    Filter(FilterArgs),
    /// Per-class train/val/test split.
    Split(SplitArgs),
    /// Build the character and component vocabulary.
    BuildVocab(BuildVocabArgs),
    /// Fit the nearest-centroid character recognizer.
    TrainRecognizer(TrainRecognizerArgs),
    /// Fit the component recognizer and calibrate its threshold.
    TrainSubchar(TrainSubcharArgs),
    /// Detection precision/recall/F1 against gold boxes.
    EvalDetection(EvalDetectionArgs),
    /// Top-k character recognition accuracy.
    EvalRecognition(EvalRecognitionArgs),
    /// Multi-label component recognition scores.
    EvalSubchar(EvalSubcharArgs),
    /// Produce token streams from slip images or gold annotations.
    Tokenize(TokenizeArgs),
    /// Sweep the fallback threshold on validation data.
    Calibrate(CalibrateArgs),
    /// Expand sub-character tokens of a BIO file into component tokens.
    ExpandPos(ExpandPosArgs),
    /// Train the HMM tagger on a BIO file.
    TrainTagger(TrainTaggerArgs),
    /// Tag a character-level BIO file.
    Tag(TagArgs),
    /// Entity-level POS scores.
    EvalPos(EvalPosArgs),
    /// Write generated glyphs, slips or POS corpora.
    GenSynthetic(GenSyntheticArgs),
    /// Serve the read-only query API.
    Serve(ServeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats(_) => "stats",
            Command::Validate(_) => "validate",
            Command::Filter(_) => "filter",
            Command::Split(_) => "split",
            Command::BuildVocab(_) => "build-vocab",
            Command::TrainRecognizer(_) => "train-recognizer",
            Command::TrainSubchar(_) => "train-subchar",
            Command::EvalDetection(_) => "eval-detection",
            Command::EvalRecognition(_) => "eval-recognition",
            Command::EvalSubchar(_) => "eval-subchar",
            Command::Tokenize(_) => "tokenize",
            Command::Calibrate(_) => "calibrate",
            Command::ExpandPos(_) => "expand-pos",
            Command::TrainTagger(_) => "train-tagger",
            Command::Tag(_) => "tag",
            Command::EvalPos(_) => "eval-pos",
            Command::GenSynthetic(_) => "gen-synthetic",
            Command::Serve(_) => "serve",
        }
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

/// Directory that manifest image paths are relative to. Defaults to the
/// manifest's own directory.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataRoot {
    #[arg(long, env = DATA_ROOT_ENV)]
    pub data_root: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GranularityArg {
    Character,
    Component,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Character => Granularity::Character,
            GranularityArg::Component => Granularity::Component,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long = "min-count", short = 'k', value_parser = clap::value_parser!(u64).range(1..))]
    pub min_count: u64,
    #[arg(long, value_enum, default_value_t = GranularityArg::Character)]
    pub granularity: GranularityArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8, value_parser = unit_interval)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1, value_parser = unit_interval)]
    pub val: f64,
    #[arg(long, default_value_t = 0.1, value_parser = unit_interval)]
    pub test: f64,
    /// Receives train.jsonl, val.jsonl, test.jsonl and split_report.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// One seed component per line; `#` starts a comment.
    #[arg(long)]
    pub seed_list: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainRecognizerArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE, value_parser = positive_f64)]
    pub temperature: f64,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainSubcharArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Validation manifest used to sweep the component threshold.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long)]
    pub out: PathBuf,
}

/// Overrides for the projection-profile segmenter.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmenterArgs {
    #[arg(long)]
    pub smoothing_window: Option<usize>,
    #[arg(long)]
    pub band_threshold: Option<f64>,
    #[arg(long)]
    pub min_gap: Option<usize>,
    #[arg(long)]
    pub min_height: Option<usize>,
    #[arg(long)]
    pub column_gap_factor: Option<f64>,
}

impl SegmenterArgs {
    pub fn resolve(&self) -> Result<SegmenterParams, String> {
        let d = SegmenterParams::default();
        let params = SegmenterParams {
            smoothing_window: self.smoothing_window.unwrap_or(d.smoothing_window),
            band_threshold: self.band_threshold.unwrap_or(d.band_threshold),
            min_gap: self.min_gap.unwrap_or(d.min_gap),
            min_height: self.min_height.unwrap_or(d.min_height),
            column_gap_factor: self.column_gap_factor.unwrap_or(d.column_gap_factor),
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("predictions").required(true).args(["pred", "images"])))]
pub struct EvalDetectionArgs {
    /// Gold detection file (JSON lines of slip_id and boxes).
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted detection file.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Directory of slip images to segment; slip id = file stem.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub iou: f64,
    #[command(flatten)]
    pub segmenter: SegmenterArgs,
    /// Write the segmenter's boxes here.
    #[arg(long, requires = "images")]
    pub write_pred: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("scorer").required(true).args(["model", "external"])))]
pub struct EvalRecognitionArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Externally produced class scores keyed by instance id.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("scorer").required(true).args(["model", "external"])))]
pub struct EvalSubcharArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Externally produced component scores keyed by instance id.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Component threshold; defaults to the model's own.
    #[arg(long, value_parser = unit_interval)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Image,
    Annotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationArg {
    Literal,
    Normalize,
}

impl From<PropagationArg> for Propagation {
    fn from(p: PropagationArg) -> Self {
        match p {
            PropagationArg::Literal => Propagation::Literal,
            PropagationArg::Normalize => Propagation::Normalize,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TokenizeArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Image)]
    pub mode: ModeArg,
    /// Gold manifest (annotation mode).
    #[arg(long, required_if_eq("mode", "annotation"))]
    pub manifest: Option<PathBuf>,
    /// Directory of slip images (image mode); slip id = file stem.
    #[arg(long, required_if_eq("mode", "image"))]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, required_if_eq("mode", "image"))]
    pub char_model: Option<PathBuf>,
    #[arg(long, required_if_eq("mode", "image"))]
    pub subchar_model: Option<PathBuf>,
    /// Precomputed boxes replacing the segmenter.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[command(flatten)]
    pub segmenter: SegmenterArgs,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub threshold: f64,
    /// Never fall back to components.
    #[arg(long)]
    pub char_only: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    TokenAccuracy,
    PosF1,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, value_enum, default_value_t = ObjectiveArg::TokenAccuracy)]
    pub objective: ObjectiveArg,
    /// Validation manifest of character crops.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub char_model: PathBuf,
    #[arg(long)]
    pub subchar_model: PathBuf,
    /// Gold BIO, one sentence per slip in sorted slip order (pos-f1).
    #[arg(long, required_if_eq("objective", "pos-f1"))]
    pub bio: Option<PathBuf>,
    /// Trained tagger (pos-f1).
    #[arg(long, required_if_eq("objective", "pos-f1"))]
    pub tagger: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PropagationArg::Literal)]
    pub propagation: PropagationArg,
    /// Comma-separated θ values; defaults to 0, 0.05, …, 1.
    #[arg(long, value_delimiter = ',', value_parser = unit_interval)]
    pub grid: Vec<f64>,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandPosArgs {
    /// Character-level BIO with surfaces in token syntax.
    #[arg(long)]
    pub bio: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Token stream aligned sentence by sentence; defaults to tokenizing the
    /// BIO surfaces as annotations.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    #[arg(long, conflicts_with = "tokens")]
    pub char_only: bool,
    #[arg(long, value_enum, default_value_t = PropagationArg::Literal)]
    pub propagation: PropagationArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTaggerArgs {
    #[arg(long)]
    pub bio: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TagArgs {
    #[arg(long)]
    pub tagger: PathBuf,
    /// Character-level BIO with surfaces in token syntax; tags are ignored.
    #[arg(long)]
    pub bio: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub char_only: bool,
    #[arg(long, value_enum, default_value_t = PropagationArg::Literal)]
    pub propagation: PropagationArg,
    /// Write component-level predictions instead of collapsing.
    #[arg(long)]
    pub expanded: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalPosArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    Glyphs,
    Slips,
    Pos,
}

#[derive(Debug, Args, Serialize)]
pub struct GenSyntheticArgs {
    #[arg(long, value_enum)]
    pub kind: SyntheticKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub components: usize,
    /// Classes with a modern equivalent (glyphs, slips).
    #[arg(long, default_value_t = 40)]
    pub modern: usize,
    /// Out-of-vocabulary classes (glyphs, slips).
    #[arg(long, default_value_t = 0)]
    pub oov: usize,
    /// Crops per class (glyphs).
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    #[arg(long, default_value_t = 12)]
    pub slips: usize,
    #[arg(long, default_value_t = 10)]
    pub min_chars: usize,
    #[arg(long, default_value_t = 30)]
    pub max_chars: usize,
    /// Gaussian noise sigma in grey levels (glyphs, slips).
    #[arg(long, default_value_t = 8.0)]
    pub noise: f64,
    /// Sentences (pos).
    #[arg(long, default_value_t = 200)]
    pub sentences: usize,
    /// Per-character OOV probability (pos).
    #[arg(long, default_value_t = 0.45, value_parser = unit_interval)]
    pub oov_probability: f64,
    /// Fraction of sentences written to train.bio (pos).
    #[arg(long, default_value_t = 0.8, value_parser = unit_interval)]
    pub train_fraction: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// POST /tokenize is enabled when the vocabulary and both models are given.
#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub data: DataRoot,
    #[arg(long, requires_all = ["char_model", "subchar_model"])]
    pub vocab: Option<PathBuf>,
    #[arg(long, requires_all = ["vocab", "subchar_model"])]
    pub char_model: Option<PathBuf>,
    #[arg(long, requires_all = ["vocab", "char_model"])]
    pub subchar_model: Option<PathBuf>,
    #[command(flatten)]
    pub segmenter: SegmenterArgs,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    pub threshold: f64,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}
