//! Paragraph vectors trained with negative sampling.
//!
//! The model is the distributed-memory variant: the hidden vector for a
//! position is the mean of the document's paragraph vector and the word
//! vectors of the surrounding context (the center word excluded), and an
//! output layer scores the center word against words drawn from a
//! `unigram^0.75` noise distribution. Only the paragraph vectors and the
//! output layer are trained; word vectors keep their random initialization.
//!
//! For target word `o` with label `y` (1 for the center word, 0 for noise) the
//! loss term is `-log σ(±u_o·h)` and the gradients are
//!
//! ```text
//! ∂/∂u_o = (σ(u_o·h) - y) · h
//! ∂/∂h   = Σ_o (σ(u_o·h) - y) · u_o
//! ∂/∂p   = ∂/∂h / (1 + |context|)
//! ```

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PvConfig {
    pub dim: usize,
    pub epochs: usize,
    /// Noise words per positive example.
    pub negatives: usize,
    /// Context radius in tokens.
    pub window: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    /// Exponent applied to unigram counts for the noise distribution.
    pub noise_exponent: f64,
    pub seed: u64,
}

impl Default for PvConfig {
    fn default() -> Self {
        PvConfig {
            dim: 300,
            epochs: 10,
            negatives: 30,
            window: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            noise_exponent: 0.75,
            seed: 0x5EED,
        }
    }
}

impl PvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("paragraph vector config: {what}")));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end && self.lr_start.is_finite()) {
            return bad("need lr_start >= lr_end > 0");
        }
        if !self.noise_exponent.is_finite() {
            return bad("noise exponent must be finite");
        }
        Ok(())
    }
}

/// Cumulative noise distribution over the vocabulary.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    cdf: Vec<f64>,
}

impl NoiseTable {
    pub fn from_counts(counts: &[usize], exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("noise distribution has no mass"));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc / total
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(NoiseTable { cdf })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn probability(&self, word: usize) -> f64 {
        let prev = if word == 0 { 0.0 } else { self.cdf[word - 1] };
        self.cdf[word] - prev
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    /// Draws a noise word different from `positive`.
    pub fn sample_excluding<R: Rng + ?Sized>(&self, positive: usize, rng: &mut R) -> usize {
        loop {
            let w = self.sample(rng);
            if w != positive {
                return w;
            }
        }
    }
}

/// Loss and gradients of one (document, position) example.
#[derive(Clone, Debug)]
pub struct Gradient {
    pub loss: f64,
    pub hidden: Vec<f64>,
    /// Gradient with respect to the document's paragraph vector.
    pub paragraph: Vec<f64>,
    /// `(word, σ(u·h) - y)` per target in draw order; the output-row gradient
    /// of a word is the sum of its coefficients times `hidden`.
    pub targets: Vec<(usize, f64)>,
}

impl Gradient {
    /// Gradient with respect to output row `word` (zero if untouched).
    pub fn output(&self, word: usize) -> Vec<f64> {
        let coef: f64 = self.targets.iter().filter(|(w, _)| *w == word).map(|(_, g)| g).sum();
        self.hidden.iter().map(|h| coef * h).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PvModel {
    config: PvConfig,
    doc_ids: Vec<String>,
    docs: Vec<Vec<usize>>,
    word_vectors: Matrix,
    paragraph_vectors: Matrix,
    output_weights: Matrix,
    noise: NoiseTable,
}

/// `-log σ(z)` without overflow.
fn neg_log_sigmoid(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Neumaier compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Initializes word and paragraph vectors uniformly in `±0.5/dim`, output
/// weights at zero, and the noise table from corpus unigram counts.
pub fn init_model(corpus: &Corpus, config: &PvConfig) -> Result<PvModel> {
    config.validate()?;
    if corpus.is_empty() || corpus.vocab_size() == 0 {
        return Err(Error::invalid("paragraph vectors need a non-empty vocabulary"));
    }
    if corpus.vocab_size() < 2 {
        return Err(Error::invalid("negative sampling needs at least two distinct words"));
    }
    let dim = config.dim;
    let vocab = corpus.vocab_size();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 0.5 / dim as f64;
    let mut uniform = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..=bound)).collect() };
    let word_vectors = Matrix::from_vec(vocab, dim, uniform(vocab * dim))?;
    let paragraph_vectors = Matrix::from_vec(corpus.len(), dim, uniform(corpus.len() * dim))?;
    let counts: Vec<usize> = (0..vocab).map(|t| corpus.term_count_by_index(t)).collect();
    Ok(PvModel {
        config: config.clone(),
        doc_ids: corpus.doc_ids(),
        docs: (0..corpus.len()).map(|d| corpus.token_ids(d)).collect(),
        word_vectors,
        paragraph_vectors,
        output_weights: Matrix::zeros(vocab, dim),
        noise: NoiseTable::from_counts(&counts, config.noise_exponent)?,
    })
}

/// Per-epoch training statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Cumulative step count at the end of the epoch.
    pub step: u64,
    pub mean_loss: f64,
}

impl PvModel {
    pub fn config(&self) -> &PvConfig {
        &self.config
    }

    pub fn word_vectors(&self) -> &Matrix {
        &self.word_vectors
    }

    pub fn paragraph_vectors(&self) -> &Matrix {
        &self.paragraph_vectors
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.output_weights
    }

    pub fn noise(&self) -> &NoiseTable {
        &self.noise
    }

    pub fn doc_tokens(&self, doc: usize) -> &[usize] {
        &self.docs[doc]
    }

    pub fn paragraph_vectors_mut(&mut self) -> &mut Matrix {
        &mut self.paragraph_vectors
    }

    pub fn output_weights_mut(&mut self) -> &mut Matrix {
        &mut self.output_weights
    }

    fn context_range(&self, doc: usize, center: usize) -> (usize, usize) {
        let len = self.docs[doc].len();
        let lo = center.saturating_sub(self.config.window);
        let hi = (center + self.config.window + 1).min(len);
        (lo, hi)
    }

    /// Mean of the paragraph vector and the context word vectors.
    pub fn hidden(&self, doc: usize, center: usize) -> Vec<f64> {
        let (lo, hi) = self.context_range(doc, center);
        let mut h = self.paragraph_vectors.row(doc).to_vec();
        let mut n = 1.0;
        for pos in (lo..hi).filter(|&p| p != center) {
            let w = self.docs[doc][pos];
            for (x, v) in h.iter_mut().zip(self.word_vectors.row(w)) {
                *x += v;
            }
            n += 1.0;
        }
        h.iter_mut().for_each(|x| *x /= n);
        h
    }

    fn context_size(&self, doc: usize, center: usize) -> usize {
        let (lo, hi) = self.context_range(doc, center);
        hi - lo - 1
    }

    /// Loss and gradients for predicting the word at `center` against the
    /// given noise words. Parameters are not modified.
    pub fn loss_and_gradient(&self, doc: usize, center: usize, negatives: &[usize]) -> Gradient {
        let hidden = self.hidden(doc, center);
        let positive = self.docs[doc][center];
        let mut grad_h = vec![0.0; hidden.len()];
        let mut targets = Vec::with_capacity(1 + negatives.len());
        let mut terms = Vec::with_capacity(1 + negatives.len());
        let labelled = std::iter::once((positive, 1.0)).chain(negatives.iter().map(|&w| (w, 0.0)));
        for (word, label) in labelled {
            let u = self.output_weights.row(word);
            let z = dot(u, &hidden);
            terms.push(if label == 1.0 { neg_log_sigmoid(z) } else { neg_log_sigmoid(-z) });
            let g = sigmoid(z) - label;
            for (gh, ui) in grad_h.iter_mut().zip(u) {
                *gh += g * ui;
            }
            targets.push((word, g));
        }
        let scale = 1.0 / (1 + self.context_size(doc, center)) as f64;
        Gradient {
            loss: compensated_sum(terms),
            hidden,
            paragraph: grad_h.iter().map(|g| g * scale).collect(),
            targets,
        }
    }

    /// Applies one gradient-descent step with the given noise words and
    /// returns the loss before the update.
    pub fn step_with(&mut self, doc: usize, center: usize, negatives: &[usize], lr: f64) -> f64 {
        let grad = self.loss_and_gradient(doc, center, negatives);
        for &(word, g) in &grad.targets {
            for (u, h) in self.output_weights.row_mut(word).iter_mut().zip(&grad.hidden) {
                *u -= lr * g * h;
            }
        }
        for (p, g) in self.paragraph_vectors.row_mut(doc).iter_mut().zip(&grad.paragraph) {
            *p -= lr * g;
        }
        grad.loss
    }

    /// One stochastic step at `(doc, center)` with freshly drawn noise words.
    pub fn train_step<R: Rng + ?Sized>(&mut self, doc: usize, center: usize, lr: f64, rng: &mut R) -> f64 {
        let positive = self.docs[doc][center];
        let negatives: Vec<usize> = (0..self.config.negatives)
            .map(|_| self.noise.sample_excluding(positive, rng))
            .collect();
        self.step_with(doc, center, &negatives, lr)
    }

    fn touched_finite(&self, doc: usize) -> bool {
        self.paragraph_vectors.row(doc).iter().all(|v| v.is_finite())
    }

    /// Runs `epochs` passes over every (document, position) pair in a seeded
    /// shuffled order, decaying the learning rate linearly. Progress records
    /// `epoch,step,mean_loss` are written to `progress` once per epoch.
    pub fn train(&mut self, mut progress: Option<&mut dyn Write>) -> Result<Vec<EpochStats>> {
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (d, toks) in self.docs.iter().enumerate() {
            for p in 0..toks.len() {
                pairs.push((d as u32, p as u32));
            }
        }
        let epochs = self.config.epochs;
        let total = (pairs.len() * epochs) as u64;
        let (lr_start, lr_end) = (self.config.lr_start, self.config.lr_end);
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0x7261_696E);
        let mut step = 0u64;
        let mut stats = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            pairs.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for &(d, p) in &pairs {
                let frac = if total > 1 { step as f64 / (total - 1) as f64 } else { 0.0 };
                let lr = lr_start - (lr_start - lr_end) * frac;
                let loss = self.train_step(d as usize, p as usize, lr, &mut rng);
                if !loss.is_finite() || !self.touched_finite(d as usize) {
                    return Err(Error::NonFinite { step });
                }
                epoch_loss += loss;
                step += 1;
            }
            let mean_loss = if pairs.is_empty() { 0.0 } else { epoch_loss / pairs.len() as f64 };
            if let Some(out) = progress.as_deref_mut() {
                writeln!(out, "{epoch},{step},{mean_loss}")?;
            }
            stats.push(EpochStats {
                epoch,
                step,
                mean_loss,
            });
        }
        if !self.output_weights.is_finite() {
            return Err(Error::NonFinite { step });
        }
        Ok(stats)
    }

    /// Paragraph vectors in corpus document order.
    pub fn export_vectors(&self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.doc_ids.clone(), self.paragraph_vectors.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_corpus() -> Corpus {
        Corpus::from_texts([("d0", "a b c d e a b"), ("d1", "c d e"), ("d2", "e")]).unwrap()
    }

    fn small_config() -> PvConfig {
        PvConfig {
            dim: 4,
            epochs: 3,
            negatives: 3,
            window: 2,
            ..PvConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(PvConfig::default().validate().is_ok());
        for bad in [
            PvConfig { epochs: 0, ..small_config() },
            PvConfig { dim: 0, ..small_config() },
            PvConfig { negatives: 0, ..small_config() },
            PvConfig { window: 0, ..small_config() },
            PvConfig { lr_end: 0.0, ..small_config() },
            PvConfig { lr_start: 0.00001, ..small_config() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let c = toy_corpus();
        let cfg = PvConfig { dim: 300, ..small_config() };
        let a = init_model(&c, &cfg).unwrap();
        let b = init_model(&c, &cfg).unwrap();
        assert_eq!(a.word_vectors(), b.word_vectors());
        assert_eq!(a.paragraph_vectors(), b.paragraph_vectors());
        assert_eq!(a.paragraph_vectors().cols(), 300);
        let bound = 0.5 / 300.0;
        assert!(a.word_vectors().as_slice().iter().all(|v| v.abs() <= bound));
        assert!(a.paragraph_vectors().as_slice().iter().all(|v| v.abs() <= bound));
        assert!(a.output_weights().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_table_probabilities() {
        let t = NoiseTable::from_counts(&[8, 1], 0.75).unwrap();
        let want = 8f64.powf(0.75) / (8f64.powf(0.75) + 1.0);
        assert!((t.probability(0) - want).abs() < 1e-15);
        assert!((t.probability(0) - 0.8263).abs() < 1e-4);
        assert!((t.probability(1) - (1.0 - want)).abs() < 1e-15);
    }

    #[test]
    fn noise_never_returns_positive() {
        let t = NoiseTable::from_counts(&[100, 1, 1], 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert_ne!(t.sample_excluding(0, &mut rng), 0);
        }
    }

    #[test]
    fn single_word_vocabulary_rejected() {
        let c = Corpus::from_texts([("d", "x x x")]).unwrap();
        assert!(init_model(&c, &small_config()).is_err());
        let empty = Corpus::from_texts([("d", "!!!")]).unwrap();
        assert!(init_model(&empty, &small_config()).is_err());
    }

    #[test]
    fn first_loss_with_zero_output_is_ln2_per_target() {
        for negatives in [1, 5, 30, 31, 64] {
            let cfg = PvConfig { negatives, ..small_config() };
            let mut m = init_model(&toy_corpus(), &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let loss = m.train_step(0, 2, 0.025, &mut rng);
            assert_eq!(loss, (1 + negatives) as f64 * std::f64::consts::LN_2);
        }
    }

    #[test]
    fn single_token_document_uses_paragraph_only() {
        let m = init_model(&toy_corpus(), &small_config()).unwrap();
        assert_eq!(m.hidden(2, 0), m.paragraph_vectors().row(2));
    }

    #[test]
    fn hidden_is_mean_of_inputs() {
        let m = init_model(&toy_corpus(), &small_config()).unwrap();
        // doc1 = c d e, window 2, center 0 -> context {d, e}
        let h = m.hidden(1, 0);
        let ids = m.doc_tokens(1).to_vec();
        for j in 0..4 {
            let want = (m.paragraph_vectors()[(1, j)]
                + m.word_vectors()[(ids[1], j)]
                + m.word_vectors()[(ids[2], j)])
                / 3.0;
            assert!((h[j] - want).abs() < 1e-18);
        }
    }

    #[test]
    fn sgd_step_moves_paragraph_by_lr_times_gradient() {
        let mut m = init_model(&toy_corpus(), &small_config()).unwrap();
        // Make output weights non-zero first.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in 0..7 {
            m.train_step(0, p, 0.5, &mut rng);
        }
        let negatives = [3, 4, 3];
        let lr = 0.1;
        let grad = m.loss_and_gradient(0, 1, &negatives);
        let before = m.paragraph_vectors().row(0).to_vec();
        m.step_with(0, 1, &negatives, lr);
        for ((after, b), g) in m.paragraph_vectors().row(0).iter().zip(&before).zip(&grad.paragraph) {
            assert_eq!(*after, b - lr * g);
        }
    }

    #[test]
    fn training_keeps_word_vectors_frozen_and_is_reproducible() {
        let c = toy_corpus();
        let mut a = init_model(&c, &small_config()).unwrap();
        let frozen = a.word_vectors().clone();
        let mut log = Vec::new();
        let stats = a.train(Some(&mut log)).unwrap();
        assert_eq!(a.word_vectors(), &frozen);
        assert_eq!(stats.len(), 3);
        let text = String::from_utf8(log).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("0,11,"));

        let mut b = init_model(&c, &small_config()).unwrap();
        b.train(None).unwrap();
        assert_eq!(a.paragraph_vectors(), b.paragraph_vectors());
        let emb = a.export_vectors().unwrap();
        assert_eq!(emb.len(), 3);
        assert_eq!(emb.dim(), 4);
    }
}
