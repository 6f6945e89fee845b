//! Hit-rate evaluation of interest models by per-user k-fold cross-validation.
//!
//! For every user and fold a mixture is fit on the training documents'
//! embeddings, `|validation|` samples are drawn from it, and each sample is
//! snapped to its nearest corpus document. A trial is a hit when that
//! document is in the validation fold. Hits and trials are summed over folds
//! and users.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::UserProfile;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::gmm::{self, GmmConfig};
use crate::recommend::recommend_masked;
use crate::seed;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Lsa,
    Learned,
}

impl Representation {
    pub fn label(self) -> &'static str {
        match self {
            Representation::Lsa => "GMM on LSA representations",
            Representation::Learned => "GMM on learned representations",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub gmm: GmmConfig,
    pub seed: u64,
    /// Remove the fold's training documents from the nearest-neighbor
    /// candidates.
    pub exclude_train: bool,
    pub representation: Representation,
}

impl EvalConfig {
    pub fn new(representation: Representation) -> Self {
        EvalConfig {
            folds: DEFAULT_FOLDS,
            gmm: GmmConfig::default(),
            seed: 0x5EED,
            exclude_train: false,
            representation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

/// Validation block sizes: the first `n % folds` blocks get one extra item.
pub fn fold_sizes(n: usize, folds: usize) -> Vec<usize> {
    (0..folds).map(|f| n / folds + usize::from(f < n % folds)).collect()
}

/// Seeded shuffle of the profile, cut into `folds` contiguous validation
/// blocks; each document validates exactly once.
pub fn kfold_split(profile: &UserProfile, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(Error::invalid("need at least 2 folds"));
    }
    let n = profile.len();
    if n < folds {
        return Err(Error::invalid(format!(
            "profile {} has {n} documents, fewer than {folds} folds",
            profile.user_id
        )));
    }
    let mut ids: Vec<String> = profile.doc_ids.iter().cloned().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for size in fold_sizes(n, folds) {
        let end = start + size;
        let validation = ids[start..end].to_vec();
        let train = ids[..start].iter().chain(&ids[end..]).cloned().collect();
        out.push(Fold { train, validation });
        start = end;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub user_id: String,
    pub hits: usize,
    pub trials: usize,
    /// Samples that snapped to one of the fold's own training documents.
    pub train_matches: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedUser {
    pub user_id: String,
    pub reason: String,
}

/// One fold's split and the documents its samples snapped to.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub fold: Fold,
    pub recommended: Vec<String>,
}

/// Runs every fold for one user: fit on the training block, draw
/// `|validation|` samples, snap each to its nearest allowed document.
pub fn evaluate_folds(profile: &UserProfile, embeddings: &EmbeddingMatrix, config: &EvalConfig) -> Result<Vec<FoldOutcome>> {
    let user_seed = seed::for_name(config.seed, &profile.user_id);
    let folds = kfold_split(profile, config.folds, seed::derive(user_seed, 0))?;
    let index = embeddings.index();
    let mut out = Vec::with_capacity(folds.len());
    for (f, fold) in folds.into_iter().enumerate() {
        let train = embeddings.select(fold.train.iter().map(String::as_str))?;
        let gmm_config = GmmConfig {
            seed: seed::derive(user_seed, 2 * f as u64 + 1),
            ..config.gmm.clone()
        };
        let model = gmm::fit(&train, &gmm_config)?;
        let mask: Option<Vec<bool>> = config.exclude_train.then(|| {
            let mut m = vec![true; embeddings.len()];
            for id in &fold.train {
                m[index[id.as_str()]] = false;
            }
            m
        });
        let recs = recommend_masked(
            &model,
            embeddings,
            fold.validation.len(),
            mask.as_deref(),
            seed::derive(user_seed, 2 * f as u64 + 2),
        )?;
        out.push(FoldOutcome {
            fold,
            recommended: recs.into_iter().map(|r| r.doc_id).collect(),
        });
    }
    Ok(out)
}

pub fn evaluate_user(profile: &UserProfile, embeddings: &EmbeddingMatrix, config: &EvalConfig) -> Result<UserOutcome> {
    let mut outcome = UserOutcome {
        user_id: profile.user_id.clone(),
        hits: 0,
        trials: 0,
        train_matches: 0,
    };
    for f in evaluate_folds(profile, embeddings, config)? {
        let validation: HashSet<&str> = f.fold.validation.iter().map(String::as_str).collect();
        let train: HashSet<&str> = f.fold.train.iter().map(String::as_str).collect();
        for id in &f.recommended {
            outcome.trials += 1;
            outcome.hits += usize::from(validation.contains(id.as_str()));
            outcome.train_matches += usize::from(train.contains(id.as_str()));
        }
    }
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub representation: Representation,
    pub exclude_train: bool,
    pub per_user: Vec<UserOutcome>,
    pub skipped: Vec<SkippedUser>,
    pub total_hits: usize,
    pub total_trials: usize,
    pub hit_rate: f64,
    /// Expected hit rate of uniformly random picks over the corpus.
    pub random_baseline: f64,
}

impl EvalReport {
    pub fn from_outcomes(
        representation: Representation,
        exclude_train: bool,
        per_user: Vec<UserOutcome>,
        skipped: Vec<SkippedUser>,
        random_baseline: f64,
    ) -> Result<Self> {
        if per_user.is_empty() {
            return Err(Error::invalid("no evaluable users"));
        }
        let total_hits = per_user.iter().map(|u| u.hits).sum();
        let total_trials: usize = per_user.iter().map(|u| u.trials).sum();
        let hit_rate = if total_trials == 0 { 0.0 } else { total_hits as f64 / total_trials as f64 };
        Ok(EvalReport {
            method: representation.label().to_string(),
            representation,
            exclude_train,
            per_user,
            skipped,
            total_hits,
            total_trials,
            hit_rate,
            random_baseline,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluates every user; users that cannot be evaluated are listed in
/// `skipped` with the reason. Fails only when no user is evaluable.
pub fn evaluate_all(profiles: &[UserProfile], embeddings: &EmbeddingMatrix, config: &EvalConfig) -> Result<EvalReport> {
    let results: Vec<_> = profiles
        .par_iter()
        .map(|p| (p, evaluate_user(p, embeddings, config)))
        .collect();
    let mut per_user = Vec::new();
    let mut skipped = Vec::new();
    let mut evaluated = Vec::new();
    for (profile, result) in results {
        match result {
            Ok(o) => {
                per_user.push(o);
                evaluated.push(profile.clone());
            }
            Err(e) => skipped.push(SkippedUser {
                user_id: profile.user_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let baseline = if evaluated.is_empty() {
        0.0
    } else {
        random_baseline(&evaluated, embeddings.len(), config.folds)?
    };
    EvalReport::from_outcomes(config.representation, config.exclude_train, per_user, skipped, baseline)
}

/// Expected hit rate when every trial picks a uniformly random document:
/// `Σ |D_v|² / corpus_size / Σ |D_v|` over the given validation sizes.
pub fn random_baseline_from_sizes(validation_sizes: &[usize], corpus_size: usize) -> Result<f64> {
    if corpus_size == 0 {
        return Err(Error::invalid("corpus size must be >= 1"));
    }
    let trials: usize = validation_sizes.iter().sum();
    if trials == 0 {
        return Ok(0.0);
    }
    let expected: f64 = validation_sizes
        .iter()
        .map(|&v| v as f64 * (v as f64 / corpus_size as f64))
        .sum();
    Ok(expected / trials as f64)
}

/// [`random_baseline_from_sizes`] over the folds of every profile large
/// enough to split.
pub fn random_baseline(profiles: &[UserProfile], corpus_size: usize, folds: usize) -> Result<f64> {
    let sizes: Vec<usize> = profiles
        .iter()
        .filter(|p| p.len() >= folds)
        .flat_map(|p| fold_sizes(p.len(), folds))
        .collect();
    random_baseline_from_sizes(&sizes, corpus_size)
}

/// Hit rate as a percentage with two decimals, e.g. `"8.63 %"`.
pub fn format_hit_rate(hits: usize, trials: usize) -> String {
    let rate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
    format!("{:.2} %", 100.0 * rate)
}

/// Plain-text results table, one row per report.
pub fn render_table(reports: &[EvalReport]) -> String {
    let rows: Vec<[String; 3]> = reports
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                format_hit_rate(r.total_hits, r.total_trials),
                format!("{} / {}", r.total_hits, r.total_trials),
            ]
        })
        .collect();
    let header = ["Method".to_string(), "Hit rate".to_string(), "Hits".to_string()];
    let mut widths = header.clone().map(|h| h.len());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String; 3]| {
        let _ = writeln!(
            out,
            "{:<w0$} | {:>w1$} | {:>w2$}",
            cells[0],
            cells[1],
            cells[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
    };
    line(&mut out, &header);
    let _ = writeln!(
        out,
        "{}-+-{}-+-{}",
        "-".repeat(widths[0]),
        "-".repeat(widths[1]),
        "-".repeat(widths[2])
    );
    for row in &rows {
        line(&mut out, row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn profile(n: usize) -> UserProfile {
        UserProfile::new("u", (0..n).map(|i| format!("d{i:03}")))
    }

    #[test]
    fn fold_sizes_examples() {
        assert_eq!(fold_sizes(10, 5), vec![2; 5]);
        assert_eq!(fold_sizes(57, 5), vec![12, 12, 11, 11, 11]);
    }

    #[test]
    fn kfold_partitions_profile() {
        let p = profile(57);
        let folds = kfold_split(&p, 5, 3).unwrap();
        let mut seen = HashSet::new();
        for f in &folds {
            assert_eq!(f.train.len() + f.validation.len(), 57);
            for v in &f.validation {
                assert!(seen.insert(v.clone()));
                assert!(!f.train.contains(v));
            }
        }
        assert_eq!(seen.len(), 57);
        assert_eq!(kfold_split(&p, 5, 3).unwrap(), folds);
        assert_ne!(kfold_split(&p, 5, 4).unwrap(), folds);
    }

    #[test]
    fn kfold_errors() {
        assert!(kfold_split(&profile(4), 5, 0).is_err());
        assert!(kfold_split(&profile(4), 1, 0).is_err());
    }

    #[test]
    fn table_one_arithmetic() {
        assert_eq!(format_hit_rate(244, 2828), "8.63 %");
        assert_eq!(format_hit_rate(362, 2828), "12.80 %");
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(random_baseline_from_sizes(&[10], 1000).unwrap(), 0.01);
        assert_eq!(random_baseline_from_sizes(&[10], 10).unwrap(), 1.0);
        assert!(random_baseline_from_sizes(&[10], 0).is_err());
        let b = random_baseline(&[profile(60)], 600, 5).unwrap();
        assert!((b - 0.02).abs() < 1e-15);
    }

    #[test]
    fn aggregation_identity() {
        let o = UserOutcome {
            user_id: "u".into(),
            hits: 3,
            trials: 11,
            train_matches: 0,
        };
        let r = EvalReport::from_outcomes(Representation::Lsa, false, vec![o], vec![], 0.0).unwrap();
        assert_eq!((r.total_hits, r.total_trials), (3, 11));
        assert!(EvalReport::from_outcomes(Representation::Lsa, false, vec![], vec![], 0.0).is_err());
    }

    #[test]
    fn render_has_table_shape() {
        let mk = |rep, hits| {
            EvalReport::from_outcomes(
                rep,
                false,
                vec![UserOutcome {
                    user_id: "u".into(),
                    hits,
                    trials: 2828,
                    train_matches: 0,
                }],
                vec![],
                0.0,
            )
            .unwrap()
        };
        let table = render_table(&[mk(Representation::Lsa, 244), mk(Representation::Learned, 362)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Method"));
        assert!(lines[2].contains("GMM on LSA representations") && lines[2].contains("8.63 %") && lines[2].ends_with("244 / 2828"));
        assert!(lines[3].contains("12.80 %") && lines[3].ends_with("362 / 2828"));
    }

    fn line_embeddings(n: usize) -> EmbeddingMatrix {
        let ids = (0..n).map(|i| format!("d{i:03}")).collect();
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        EmbeddingMatrix::new(ids, Matrix::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn trials_equal_profile_size() {
        let emb = line_embeddings(80);
        let p = profile(57);
        let cfg = EvalConfig {
            gmm: GmmConfig { k: 1, ..GmmConfig::default() },
            ..EvalConfig::new(Representation::Lsa)
        };
        let o = evaluate_user(&p, &emb, &cfg).unwrap();
        assert_eq!(o.trials, 57);
        assert!(o.hits <= o.trials);
        assert_eq!(evaluate_user(&p, &emb, &cfg).unwrap(), o);
    }

    #[test]
    fn unevaluable_users_are_skipped() {
        let emb = line_embeddings(20);
        let ok = UserProfile::new("ok", (0..10).map(|i| format!("d{i:03}")));
        let tiny = UserProfile::new("tiny", ["d000", "d001"]);
        let cfg = EvalConfig::new(Representation::Lsa);
        let r = evaluate_all(&[ok, tiny.clone()], &emb, &cfg).unwrap();
        assert_eq!(r.per_user.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].user_id, "tiny");
        assert!(evaluate_all(&[tiny], &emb, &cfg).is_err());
    }
}
