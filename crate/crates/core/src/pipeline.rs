//! End-to-end embedding of a corpus with either representation.

use std::io::Write;

use crate::corpus::Corpus;
use crate::dimred::{self, KpcaModel};
use crate::embedding::EmbeddingMatrix;
use crate::error::Result;
use crate::lsa::Lsa;
use crate::pvec::{self, EpochStats, PvConfig};

/// tf-idf weighting followed by a rank-`rank` SVD projection.
pub fn embed_lsa(corpus: &Corpus, score_range: (f64, f64), rank: usize) -> Result<EmbeddingMatrix> {
    Ok(Lsa::fit(corpus, score_range, rank)?.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedConfig {
    pub pv: PvConfig,
    /// Requested kernel PCA components, capped at `documents - 1`.
    pub components: usize,
    /// RBF bandwidth; the median heuristic is used when `None`.
    pub gamma: Option<f64>,
    pub seed: u64,
}

impl Default for LearnedConfig {
    fn default() -> Self {
        LearnedConfig {
            pv: PvConfig::default(),
            components: dimred::DEFAULT_COMPONENTS,
            gamma: None,
            seed: 0x5EED,
        }
    }
}

pub struct Learned {
    pub paragraph_vectors: EmbeddingMatrix,
    pub kpca: KpcaModel,
    pub embeddings: EmbeddingMatrix,
    pub epochs: Vec<EpochStats>,
}

/// Trains paragraph vectors and reduces them with RBF kernel PCA.
pub fn embed_learned(corpus: &Corpus, config: &LearnedConfig, progress: Option<&mut dyn Write>) -> Result<Learned> {
    let mut model = pvec::init_model(corpus, &config.pv)?;
    let epochs = model.train(progress)?;
    let paragraph_vectors = model.export_vectors()?;
    let components = config.components.min(corpus.len().saturating_sub(1));
    let kpca = dimred::fit_kpca(paragraph_vectors.vectors(), components, config.gamma, config.seed)?;
    let embeddings = EmbeddingMatrix::new(paragraph_vectors.doc_ids().to_vec(), kpca.coordinates().clone())?;
    Ok(Learned {
        paragraph_vectors,
        kpca,
        embeddings,
        epochs,
    })
}
