//! Latent semantic analysis: tf-idf weighting with a score-range term filter,
//! followed by a truncated SVD.
//!
//! tf is the raw count of a term in a document and `idf(t) = ln(N / df(t)) + 1`.
//! A term is kept when its largest tf-idf score over all documents falls in
//! the configured range (inclusive).

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::Corpus;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Matrix};

/// Default `[low, high]` range on a term's maximum tf-idf score.
pub const DEFAULT_SCORE_RANGE: (f64, f64) = (0.3, 10.0);
/// Default number of LSA components.
pub const DEFAULT_RANK: usize = 10;

#[derive(Clone, Debug)]
pub struct TfIdfModel {
    kept_terms: HashMap<String, usize>,
    terms: Vec<String>,
    idf: Vec<f64>,
    score_range: (f64, f64),
}

impl TfIdfModel {
    /// Kept terms in column order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<usize> {
        self.kept_terms.get(term).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn score_range(&self) -> (f64, f64) {
        self.score_range
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Dense tf-idf vector of one token sequence over the kept terms.
    pub fn vectorize<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut row = vec![0.0; self.terms.len()];
        for tok in tokens {
            if let Some(&j) = self.kept_terms.get(tok.as_ref()) {
                row[j] += 1.0;
            }
        }
        for (v, idf) in row.iter_mut().zip(&self.idf) {
            *v *= idf;
        }
        row
    }
}

pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    (n_docs as f64 / doc_freq as f64).ln() + 1.0
}

pub fn fit_tfidf(corpus: &Corpus, score_range: (f64, f64)) -> Result<TfIdfModel> {
    let (low, high) = score_range;
    if corpus.is_empty() {
        return Err(Error::invalid("cannot fit tf-idf on an empty corpus"));
    }
    if low.is_nan() || high.is_nan() || low > high {
        return Err(Error::invalid(format!("bad tf-idf score range [{low}, {high}]")));
    }
    let n = corpus.len();
    let vocab = corpus.vocab_size();
    let idfs: Vec<f64> = (0..vocab).map(|t| idf(n, corpus.doc_freq_by_index(t))).collect();

    let mut max_score = vec![0.0f64; vocab];
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for d in 0..n {
        counts.clear();
        for t in corpus.token_ids(d) {
            *counts.entry(t).or_default() += 1;
        }
        for (&t, &c) in &counts {
            max_score[t] = max_score[t].max(c as f64 * idfs[t]);
        }
    }

    let mut kept_terms = HashMap::new();
    let mut terms = Vec::new();
    let mut idf = Vec::new();
    for (t, term) in corpus.terms().iter().enumerate() {
        if (low..=high).contains(&max_score[t]) {
            kept_terms.insert(term.clone(), terms.len());
            terms.push(term.clone());
            idf.push(idfs[t]);
        }
    }
    Ok(TfIdfModel {
        kept_terms,
        terms,
        idf,
        score_range,
    })
}

/// One dense row per document over the kept terms.
pub fn transform_tfidf(model: &TfIdfModel, corpus: &Corpus) -> Result<EmbeddingMatrix> {
    let rows: Vec<Vec<f64>> = corpus
        .documents()
        .par_iter()
        .map(|doc| model.vectorize(&doc.tokens))
        .collect();
    let mut data = Vec::with_capacity(rows.len() * model.n_terms());
    for r in rows {
        data.extend(r);
    }
    let vectors = Matrix::from_vec(corpus.len(), model.n_terms(), data)?;
    EmbeddingMatrix::new(corpus.doc_ids(), vectors)
}

/// Top right-singular vectors of a matrix.
#[derive(Clone, Debug)]
pub struct SvdModel {
    /// `rank x cols`; row `j` is the j-th right singular vector.
    components: Matrix,
    singular_values: Vec<f64>,
}

impl SvdModel {
    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }

    /// Coordinates of `x` along each retained component.
    pub fn project_row(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter_rows().map(|v| dot(x, v)).collect()
    }

    pub fn project_matrix(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: m.cols(),
            });
        }
        let rows: Vec<Vec<f64>> = m.iter_rows().map(|r| self.project_row(r)).collect();
        Matrix::from_rows(&rows)
            .map(|p| if p.rows() == 0 { Matrix::zeros(0, self.rank()) } else { p })
    }
}

/// Truncated SVD through the eigendecomposition of the smaller Gram matrix.
///
/// Deterministic. Each component's sign is fixed so that its
/// largest-magnitude entry is positive.
pub fn fit_svd(matrix: &Matrix, rank: usize) -> Result<SvdModel> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    if rank > rows.min(cols) {
        return Err(Error::invalid(format!(
            "rank {rank} exceeds min(rows, cols) = {}",
            rows.min(cols)
        )));
    }
    if !matrix.is_finite() {
        return Err(Error::invalid("matrix contains non-finite values"));
    }
    let mut components = Matrix::zeros(rank, cols);
    let mut singular_values = Vec::with_capacity(rank);

    if cols <= rows {
        let eig = sym_eigen(&matrix.gram_cols())?;
        for j in 0..rank {
            singular_values.push(eig.values[j].max(0.0).sqrt());
            for i in 0..cols {
                components[(j, i)] = eig.vectors[(i, j)];
            }
        }
    } else {
        // Wide matrix: left singular vectors from AAᵀ, then v = Aᵀu / σ.
        let eig = sym_eigen(&matrix.gram_rows())?;
        let scale = eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        for j in 0..rank {
            let sigma = eig.values[j].max(0.0).sqrt();
            singular_values.push(sigma);
            if sigma > scale * 1e-10 && sigma > 0.0 {
                let u = eig.vector(j);
                let v = components.row_mut(j);
                for (ui, row) in u.iter().zip(matrix.iter_rows()) {
                    for (vk, &a) in v.iter_mut().zip(row) {
                        *vk += ui * a;
                    }
                }
                v.iter_mut().for_each(|x| *x /= sigma);
            }
        }
        orthonormalize(&mut components);
    }
    canonicalize_rows(&mut components);
    Ok(SvdModel {
        components,
        singular_values,
    })
}

/// Modified Gram-Schmidt over the rows; rows that vanish (null directions)
/// are replaced by the first standard basis vector independent of the rest.
fn orthonormalize(m: &mut Matrix) {
    let (r, c) = (m.rows(), m.cols());
    for j in 0..r {
        for attempt in 0..=c {
            for k in 0..j {
                let proj = dot(m.row(j), m.row(k));
                let prev = m.row(k).to_vec();
                for (x, y) in m.row_mut(j).iter_mut().zip(&prev) {
                    *x -= proj * y;
                }
            }
            let norm = dot(m.row(j), m.row(j)).sqrt();
            if norm > 1e-8 {
                m.row_mut(j).iter_mut().for_each(|x| *x /= norm);
                break;
            }
            let row = m.row_mut(j);
            row.iter_mut().for_each(|x| *x = 0.0);
            if attempt < c {
                row[attempt] = 1.0;
            }
        }
    }
}

fn canonicalize_rows(m: &mut Matrix) {
    for j in 0..m.rows() {
        let row = m.row_mut(j);
        let pivot = row.iter().fold(0.0f64, |p, &v| if v.abs() > p.abs() { v } else { p });
        if pivot < 0.0 {
            row.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Projects every row onto the model's components.
pub fn project_svd(model: &SvdModel, matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let projected = model.project_matrix(matrix.vectors())?;
    EmbeddingMatrix::new(matrix.doc_ids().to_vec(), projected)
}

/// Full LSA pipeline: tf-idf, filter, SVD to `rank` components.
#[derive(Clone, Debug)]
pub struct Lsa {
    pub tfidf: TfIdfModel,
    pub svd: SvdModel,
}

impl Lsa {
    pub fn fit(corpus: &Corpus, score_range: (f64, f64), rank: usize) -> Result<(Lsa, EmbeddingMatrix)> {
        let tfidf = fit_tfidf(corpus, score_range)?;
        let weighted = transform_tfidf(&tfidf, corpus)?;
        let svd = fit_svd(weighted.vectors(), rank)?;
        let embedded = project_svd(&svd, &weighted)?;
        Ok((Lsa { tfidf, svd }, embedded))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::jacobi_eigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Corpus {
        Corpus::from_texts([("d1", "a a b"), ("d2", "b c")]).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn tfidf_hand_computed() {
        let model = fit_tfidf(&toy(), (0.0, f64::INFINITY)).unwrap();
        assert_eq!(model.terms(), ["a", "b", "c"]);
        let m = transform_tfidf(&model, &toy()).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let want = [[2.0 * (ln2 + 1.0), 1.0, 0.0], [0.0, 1.0, ln2 + 1.0]];
        for i in 0..2 {
            for j in 0..3 {
                assert!((m.row(i)[j] - want[i][j]).abs() < 1e-15);
            }
        }
        assert!((m.row(0)[0] - 3.386).abs() < 1e-3);
        assert!((m.row(1)[2] - 1.693).abs() < 1e-3);
    }

    #[test]
    fn default_range_keeps_all_toy_terms() {
        let model = fit_tfidf(&toy(), DEFAULT_SCORE_RANGE).unwrap();
        assert_eq!(model.n_terms(), 3);
    }

    #[test]
    fn range_filters_on_max_score() {
        // b has max score 1.0, a 3.386, c 1.693
        let model = fit_tfidf(&toy(), (1.5, 2.0)).unwrap();
        assert_eq!(model.terms(), ["c"]);
        let m = transform_tfidf(&model, &toy()).unwrap();
        assert_eq!(m.row(0), &[0.0]);
        assert!(model.idf().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn tfidf_errors() {
        assert!(fit_tfidf(&toy(), (2.0, 1.0)).is_err());
        let empty = Corpus::new(vec![]).unwrap();
        assert!(fit_tfidf(&empty, (0.0, 1.0)).is_err());
    }

    #[test]
    fn duplicate_documents_give_identical_rows() {
        let c = Corpus::from_texts([("x", "p q q"), ("y", "r"), ("z", "p q q")]).unwrap();
        let m = transform_tfidf(&fit_tfidf(&c, (0.0, 100.0)).unwrap(), &c).unwrap();
        assert_eq!(m.row(0), m.row(2));
    }

    #[test]
    fn svd_of_diagonal() {
        let a = Matrix::from_rows(&[[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let svd = fit_svd(&a, 2).unwrap();
        assert_eq!(svd.singular_values(), &[3.0, 2.0]);
        assert_eq!(svd.components().row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(svd.components().row(1), &[0.0, 1.0, 0.0]);
    }

    fn reconstruction_error(a: &Matrix, svd: &SvdModel) -> f64 {
        let us = svd.project_matrix(a).unwrap();
        let back = us.matmul(svd.components()).unwrap();
        let mut err = 0.0;
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            err += (x - y) * (x - y);
        }
        err.sqrt()
    }

    #[test]
    fn full_rank_reconstruction_tall_and_wide() {
        for (r, c, seed) in [(12, 7, 1), (7, 12, 2), (9, 9, 3)] {
            let a = random_matrix(r, c, seed);
            let svd = fit_svd(&a, r.min(c)).unwrap();
            assert!(reconstruction_error(&a, &svd) < 1e-8);
        }
    }

    #[test]
    fn truncated_error_matches_gram_oracle() {
        let a = random_matrix(50, 30, 9);
        let svd = fit_svd(&a, 10).unwrap();
        let oracle = jacobi_eigen(&a.gram_cols()).unwrap();
        let tail: f64 = oracle.values[10..].iter().map(|v| v.max(0.0)).sum();
        assert!((reconstruction_error(&a, &svd) - tail.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let a = random_matrix(15, 40, 4);
        let svd = fit_svd(&a, 15).unwrap();
        let vvt = svd.components().matmul(&svd.components().transpose()).unwrap();
        for i in 0..15 {
            for j in 0..15 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vvt[(i, j)] - want).abs() < 1e-8);
            }
        }
        assert!(svd.singular_values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_wide_matrix_still_orthonormal() {
        let row = [1.0, 2.0, 3.0, 4.0];
        let a = Matrix::from_rows(&[row, row.map(|x| 2.0 * x)]).unwrap();
        let svd = fit_svd(&a, 2).unwrap();
        assert!(svd.singular_values()[1].abs() < 1e-7);
        let c = svd.components();
        assert!(dot(c.row(0), c.row(1)).abs() < 1e-8);
        assert!((dot(c.row(1), c.row(1)) - 1.0).abs() < 1e-12);
        assert!(reconstruction_error(&a, &svd) < 1e-8);
    }

    #[test]
    fn projection_properties() {
        let a = random_matrix(20, 6, 5);
        let svd = fit_svd(&a, 3).unwrap();
        let ids: Vec<String> = (0..20).map(|i| format!("d{i}")).collect();
        let emb = EmbeddingMatrix::new(ids, a.clone()).unwrap();
        let p = project_svd(&svd, &emb).unwrap();
        assert_eq!(p.dim(), 3);
        for i in 0..20 {
            for j in 0..3 {
                assert_eq!(p.row(i)[j], dot(a.row(i), svd.components().row(j)));
            }
        }
        assert_eq!(svd.project_row(&[0.0; 6]), vec![0.0; 3]);
        let bad = EmbeddingMatrix::new(vec!["x".into()], Matrix::zeros(1, 5)).unwrap();
        assert!(matches!(project_svd(&svd, &bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rank_one_projection_keeps_distances() {
        let dir = [0.6, 0.0, -0.8];
        let scales = [1.0, -2.0, 0.5, 3.0];
        let rows: Vec<Vec<f64>> = scales.iter().map(|s| dir.iter().map(|d| s * d).collect()).collect();
        let a = Matrix::from_rows(&rows).unwrap();
        let svd = fit_svd(&a, 1).unwrap();
        let p = svd.project_matrix(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let full = crate::linalg::euclidean_distance(a.row(i), a.row(j));
                let low = (p[(i, 0)] - p[(j, 0)]).abs();
                assert!((full - low).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_too_large() {
        assert!(fit_svd(&Matrix::zeros(3, 5), 4).is_err());
    }
}
