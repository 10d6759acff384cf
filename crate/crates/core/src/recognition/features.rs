use serde::{Deserialize, Serialize};

use super::RecognitionError;
use crate::raster::{area_resize, ink_mask, GrayImage};

pub const FEATURE_SIDE: usize = 32;
pub const FEATURE_DIM: usize = FEATURE_SIDE * FEATURE_SIDE;

/// Unit-norm (or all-zero) glyph descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// L2-normalizes `values`; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Self(values)
    }

    /// Wraps raw values, checking the length and the unit-or-zero norm.
    pub fn from_raw(values: Vec<f64>) -> Result<Self, RecognitionError> {
        if values.len() != FEATURE_DIM {
            return Err(RecognitionError::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: values.len(),
            });
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm != 0.0 && (norm - 1.0).abs() > 1e-6 {
            return Err(RecognitionError::InvalidModel(format!("vector norm {norm} is neither 0 nor 1")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Normalized mean of several vectors (zero if they cancel or are all zero).
    pub fn mean<'a, I: IntoIterator<Item = &'a FeatureVector>>(vectors: I, dim: usize) -> Self {
        let mut acc = vec![0.0; dim];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(&v.0) {
                *a += x;
            }
        }
        Self::normalized(acc)
    }
}

/// Cosine similarity of unit-or-zero vectors; 0 if either is zero.
pub fn cosine(a: &FeatureVector, b: &FeatureVector) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum()
}

/// Area-average resize to 32×32, Otsu-binarize (ink = 1), flatten, normalize.
pub fn extract_features(image: &GrayImage) -> Result<FeatureVector, RecognitionError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(RecognitionError::EmptyImage);
    }
    let small = area_resize(image, FEATURE_SIDE, FEATURE_SIDE);
    let ink = ink_mask(&small);
    Ok(FeatureVector::normalized(
        ink.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
    ))
}
