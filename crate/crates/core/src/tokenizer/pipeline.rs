use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Token, TokenSequence, TokenizeError};
use crate::corpus::{join_components, GlyphLabel};
use crate::detection::{reading_order, BoundingBox, Detector};
use crate::raster::{crop, GrayImage};
use crate::recognition::{extract_features, CharRecognizer, ComponentScore, SubCharRecognizer, FEATURE_DIM};
use crate::vocab::{Decomposition, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    #[default]
    Image,
    Annotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Character tokens need confidence at least this; below it the token
    /// falls back to components.
    pub confidence_threshold: f64,
    pub mode: TokenizerMode,
    /// Baseline: every character is one atomic token, never decomposed.
    pub char_only: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.5,
            mode: TokenizerMode::Image,
            char_only: false,
        }
    }
}

impl TokenizerConfig {
    pub fn with_threshold(theta: f64) -> Result<Self, TokenizeError> {
        let cfg = Self {
            confidence_threshold: theta,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TokenizeError> {
        if (0.0..=1.0).contains(&self.confidence_threshold) {
            Ok(())
        } else {
            Err(TokenizeError::InvalidThreshold(self.confidence_threshold))
        }
    }
}

/// Both recognizers' views of one crop, computed once and reusable across
/// thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CropRecognition {
    pub blank: bool,
    /// Best character class and its confidence.
    pub top: (String, f64),
    pub components: Vec<ComponentScore>,
}

impl CropRecognition {
    pub fn token(&self, theta: f64, char_only: bool) -> Token {
        if self.blank {
            return Token::Unknown;
        }
        let (key, confidence) = &self.top;
        if char_only || *confidence >= theta {
            Token::Char {
                key: key.clone(),
                confidence: *confidence,
            }
        } else {
            Token::SubChar {
                components: self.components.clone(),
            }
        }
    }
}

fn check_models(char_rec: &CharRecognizer, subchar_rec: &SubCharRecognizer) -> Result<(), TokenizeError> {
    let dims = std::iter::once(char_rec.feature_dim()).chain(subchar_rec.prototypes().iter().map(|p| p.dim()));
    for dim in dims {
        if dim != FEATURE_DIM {
            return Err(TokenizeError::ModelMismatch {
                expected: FEATURE_DIM,
                actual: dim,
            });
        }
    }
    Ok(())
}

pub fn recognize_crop(image: &GrayImage, char_rec: &CharRecognizer, subchar_rec: &SubCharRecognizer) -> Result<CropRecognition, TokenizeError> {
    let features = extract_features(image)?;
    let ranking = char_rec.recognize(&features);
    let (key, confidence) = ranking.top().ok_or(TokenizeError::EmptyModel)?;
    Ok(CropRecognition {
        blank: features.is_zero(),
        top: (key.to_string(), confidence),
        components: subchar_rec.recognize(&features),
    })
}

/// Detected boxes in reading order with the recognition of each crop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlipRecognition {
    pub boxes: Vec<BoundingBox>,
    pub crops: Vec<CropRecognition>,
}

impl SlipRecognition {
    pub fn tokens(&self, slip_id: &str, cfg: &TokenizerConfig) -> TokenSequence {
        TokenSequence::new(
            slip_id,
            self.crops
                .iter()
                .map(|c| c.token(cfg.confidence_threshold, cfg.char_only))
                .collect(),
        )
    }
}

pub fn recognize_slip(
    image: &GrayImage,
    detector: &dyn Detector,
    char_rec: &CharRecognizer,
    subchar_rec: &SubCharRecognizer,
) -> Result<SlipRecognition, TokenizeError> {
    check_models(char_rec, subchar_rec)?;
    let detected = detector.detect(image);
    let boxes: Vec<BoundingBox> = reading_order(&detected).into_iter().map(|i| detected[i]).collect();
    let crops = boxes
        .iter()
        .map(|b| {
            let (x, y, w, h) = b.pixel_rect();
            match crop(image, x, y, w, h) {
                Some(region) => recognize_crop(&region, char_rec, subchar_rec),
                None => Ok(CropRecognition {
                    blank: true,
                    top: (String::new(), 0.0),
                    components: Vec::new(),
                }),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SlipRecognition { boxes, crops })
}

/// Detect, order, recognize, and fall back to components below the threshold.
pub fn tokenize_slip_image(
    slip_id: &str,
    image: &GrayImage,
    detector: &dyn Detector,
    char_rec: &CharRecognizer,
    subchar_rec: &SubCharRecognizer,
    cfg: &TokenizerConfig,
) -> Result<TokenSequence, TokenizeError> {
    cfg.validate()?;
    Ok(recognize_slip(image, detector, char_rec, subchar_rec)?.tokens(slip_id, cfg))
}

/// Tokenizes many slips in parallel; output is sorted by slip id.
pub fn tokenize_slip_images<D: Detector + Sync>(
    slips: &[(String, GrayImage)],
    detector: &D,
    char_rec: &CharRecognizer,
    subchar_rec: &SubCharRecognizer,
    cfg: &TokenizerConfig,
) -> Result<Vec<TokenSequence>, TokenizeError> {
    let mut out = slips
        .par_iter()
        .map(|(id, img)| tokenize_slip_image(id, img, detector, char_rec, subchar_rec, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.slip_id.cmp(&b.slip_id));
    Ok(out)
}

/// Tokens straight from gold labels, so granularity can be compared without
/// recognizer noise.
pub fn tokenize_annotation(
    slip_id: &str,
    labels: &[GlyphLabel],
    vocab: &Vocabulary,
    cfg: &TokenizerConfig,
) -> Result<TokenSequence, TokenizeError> {
    let tokens = labels
        .iter()
        .map(|label| {
            if let GlyphLabel::Components { items, .. } = label {
                if items.is_empty() {
                    return Err(TokenizeError::EmptyComponents);
                }
            }
            let decomposition = vocab.decompose(label)?;
            Ok(match (decomposition, cfg.char_only) {
                (Decomposition::Unknown, _) => Token::Unknown,
                (Decomposition::Character(_), _) => Token::char(label.class_key()),
                (Decomposition::Components(_), true) => Token::char(join_components(label.items())),
                (Decomposition::Components(ids), false) => {
                    let mut sorted = ids.clone();
                    sorted.sort_unstable();
                    if sorted.windows(2).any(|w| w[0] == w[1]) {
                        return Err(TokenizeError::DuplicateComponent(label.class_key()));
                    }
                    Token::sub_char(ids)
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TokenSequence::new(slip_id, tokens))
}
