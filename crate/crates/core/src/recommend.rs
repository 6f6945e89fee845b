//! Recommendation by sampling an interest model and snapping each sample to
//! its nearest corpus document (Euclidean distance, exhaustive scan).

use std::collections::HashSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{write_csv_field, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::gmm::GmmModel;
use crate::linalg::squared_distance;

#[derive(Clone, Debug, PartialEq)]
pub struct Recommendation {
    pub doc_id: String,
    pub sample_index: usize,
    pub distance: f64,
}

/// Row index and distance of the closest allowed document.
///
/// `allowed[i] == false` removes row `i` from consideration. Ties on distance
/// go to the lexicographically smallest document id.
pub fn nearest_row(sample: &[f64], embeddings: &EmbeddingMatrix, allowed: Option<&[bool]>) -> Result<(usize, f64)> {
    if sample.len() != embeddings.dim() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.dim(),
            found: sample.len(),
        });
    }
    let ids = embeddings.doc_ids();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..embeddings.len() {
        if allowed.is_some_and(|a| !a[i]) {
            continue;
        }
        let d2 = squared_distance(sample, embeddings.row(i));
        best = match best {
            Some((b, bd)) if bd < d2 || (bd == d2 && ids[b] <= ids[i]) => Some((b, bd)),
            _ => Some((i, d2)),
        };
    }
    best.map(|(i, d2)| (i, d2.sqrt()))
        .ok_or_else(|| Error::invalid("no candidate documents left after exclusion"))
}

/// Mask of rows whose id is not in `excluded`.
pub fn candidate_mask(embeddings: &EmbeddingMatrix, excluded: &HashSet<String>) -> Vec<bool> {
    embeddings.doc_ids().iter().map(|id| !excluded.contains(id)).collect()
}

/// The non-excluded document closest to `sample`, with its distance.
pub fn nearest_document<'a>(
    sample: &[f64],
    embeddings: &'a EmbeddingMatrix,
    excluded: &HashSet<String>,
) -> Result<(&'a str, f64)> {
    let mask = candidate_mask(embeddings, excluded);
    let (i, d) = nearest_row(sample, embeddings, Some(&mask))?;
    Ok((embeddings.doc_ids()[i].as_str(), d))
}

/// Draws `n` samples from `model` and maps each to its nearest allowed
/// document. Duplicates are kept, one recommendation per sample.
pub fn recommend(
    model: &GmmModel,
    embeddings: &EmbeddingMatrix,
    n: usize,
    excluded: &HashSet<String>,
    seed: u64,
) -> Result<Vec<Recommendation>> {
    let mask = candidate_mask(embeddings, excluded);
    recommend_masked(model, embeddings, n, Some(&mask), seed)
}

pub(crate) fn recommend_masked(
    model: &GmmModel,
    embeddings: &EmbeddingMatrix,
    n: usize,
    allowed: Option<&[bool]>,
    seed: u64,
) -> Result<Vec<Recommendation>> {
    if model.dim() != embeddings.dim() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.dim(),
            found: model.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|sample_index| {
            let x = model.sample_one(&mut rng);
            let (i, distance) = nearest_row(&x, embeddings, allowed)?;
            Ok(Recommendation {
                doc_id: embeddings.doc_ids()[i].clone(),
                sample_index,
                distance,
            })
        })
        .collect()
}

/// Writes `sample_index,doc_id,distance` CSV.
pub fn write_csv<W: Write>(recs: &[Recommendation], mut out: W) -> Result<()> {
    writeln!(out, "sample_index,doc_id,distance")?;
    for r in recs {
        write!(out, "{},", r.sample_index)?;
        write_csv_field(&mut out, &r.doc_id)?;
        writeln!(out, ",{:.16e}", r.distance)?;
    }
    Ok(())
}
