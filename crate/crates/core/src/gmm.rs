//! Gaussian mixture models of user interest, fit by expectation maximization.
//!
//! Covariances are diagonal (or spherical). Every variance is floored at
//! `reg`: the M-step sets each variance to `max(weighted variance, reg)`, the
//! maximizer of the expected complete log-likelihood under that constraint,
//! so the per-iteration log-likelihood never decreases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const EMPTY_COMPONENT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceType {
    #[default]
    Diagonal,
    Spherical,
}

impl std::str::FromStr for CovarianceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(CovarianceType::Diagonal),
            "spherical" => Ok(CovarianceType::Spherical),
            other => Err(Error::invalid(format!("unknown covariance type {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmmConfig {
    pub k: usize,
    pub covariance: CovarianceType,
    /// Variance floor.
    pub reg: f64,
    /// Relative mean log-likelihood improvement below which EM stops.
    pub tol: f64,
    pub max_iter: usize,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            k: 2,
            covariance: CovarianceType::Diagonal,
            reg: 1e-6,
            tol: 1e-4,
            max_iter: 200,
            n_init: 4,
            seed: 0x5EED,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("gmm: k must be >= 1"));
        }
        if !(self.reg > 0.0 && self.reg.is_finite()) {
            return Err(Error::invalid("gmm: reg must be > 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("gmm: tol must be > 0"));
        }
        if self.max_iter == 0 || self.n_init == 0 {
            return Err(Error::invalid("gmm: max_iter and n_init must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub covariance: CovarianceType,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Per-dimension variances; spherical models repeat one value.
    pub variances: Vec<Vec<f64>>,
    /// Mean per-point log-likelihood of the training data.
    pub train_loglik: f64,
}

/// Mean log-likelihood after every EM iteration, per restart.
#[derive(Clone, Debug, Default)]
pub struct FitTrace {
    pub restarts: Vec<Vec<f64>>,
}

fn log_normal_diag(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
        let d = xi - mi;
        acc += LN_2PI + vi.ln() + d * d / vi;
    }
    -0.5 * acc
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl GmmModel {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Free parameters: `(k-1)` weights, `k*d` means, and `k*d` (diagonal)
    /// or `k` (spherical) variances.
    pub fn n_params(&self) -> usize {
        let (k, d) = (self.k, self.dim());
        let var = match self.covariance {
            CovarianceType::Diagonal => k * d,
            CovarianceType::Spherical => k,
        };
        (k - 1) + k * d + var
    }

    fn component_log_densities(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.weights[c].ln() + log_normal_diag(x, &self.means[c], &self.variances[c]);
        }
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut buf = vec![0.0; self.k];
        self.component_log_densities(x, &mut buf);
        Ok(log_sum_exp(&buf))
    }

    /// Posterior component probabilities for each point.
    pub fn responsibilities(&self, points: &Matrix) -> Result<Matrix> {
        if points.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: points.cols(),
            });
        }
        let mut resp = Matrix::zeros(points.rows(), self.k);
        e_step(self, points, &mut resp, &mut vec![0.0; points.rows()]);
        Ok(resp)
    }

    pub fn mean_loglik(&self, points: &Matrix) -> Result<f64> {
        let mut total = 0.0;
        for row in points.iter_rows() {
            total += self.log_pdf(row)?;
        }
        Ok(total / points.rows() as f64)
    }

    /// Draws one point; component first, then each coordinate.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut comp = self.k - 1;
        for (c, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = c;
                break;
            }
        }
        self.means[comp]
            .iter()
            .zip(&self.variances[comp])
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect()
    }

    /// `count` draws, seeded. Draws are sequential, so a shorter run is a
    /// prefix of a longer one with the same seed.
    pub fn sample(&self, count: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..count).map(|_| self.sample_one(&mut rng)).collect();
        if rows.is_empty() {
            return Matrix::zeros(0, self.dim());
        }
        Matrix::from_rows(&rows).expect("samples share the model dimension")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GmmModel = serde_json::from_str(s)?;
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let d = self.dim();
        let shape_ok = self.k >= 1
            && self.weights.len() == self.k
            && self.means.len() == self.k
            && self.variances.len() == self.k
            && self.means.iter().all(|m| m.len() == d)
            && self.variances.iter().all(|v| v.len() == d);
        if !shape_ok {
            return Err(Error::invalid("gmm: inconsistent parameter shapes"));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("gmm: weights must be non-negative and sum to 1"));
        }
        if self.variances.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite()))
            || self.means.iter().flatten().any(|m| !m.is_finite())
        {
            return Err(Error::invalid("gmm: variances must be positive and parameters finite"));
        }
        Ok(())
    }
}

/// Fills responsibilities and per-point log-likelihoods; returns the mean
/// log-likelihood.
fn e_step(model: &GmmModel, points: &Matrix, resp: &mut Matrix, point_ll: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (i, x) in points.iter_rows().enumerate() {
        let r = resp.row_mut(i);
        model.component_log_densities(x, r);
        let lse = log_sum_exp(r);
        r.iter_mut().for_each(|v| *v = (*v - lse).exp());
        point_ll[i] = lse;
        total += lse;
    }
    total / points.rows() as f64
}

fn m_step(model: &mut GmmModel, points: &Matrix, resp: &Matrix, point_ll: &[f64], reg: f64, data_var: &[f64]) {
    let (n, d) = (points.rows(), points.cols());
    for c in 0..model.k {
        let nk: f64 = (0..n).map(|i| resp[(i, c)]).sum();
        if nk < EMPTY_COMPONENT {
            // Re-seed on the worst-explained point.
            let worst = (0..n)
                .min_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]))
                .unwrap_or(0);
            model.means[c] = points.row(worst).to_vec();
            model.variances[c] = data_var.to_vec();
            model.weights[c] = 1.0 / n as f64;
            continue;
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, c)];
            for (m, x) in mean.iter_mut().zip(points.row(i)) {
                *m += r * x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, c)];
            for ((v, x), m) in var.iter_mut().zip(points.row(i)).zip(&mean) {
                let diff = x - m;
                *v += r * diff * diff;
            }
        }
        var.iter_mut().for_each(|v| *v /= nk);
        if model.covariance == CovarianceType::Spherical {
            let avg = var.iter().sum::<f64>() / d as f64;
            var.iter_mut().for_each(|v| *v = avg);
        }
        var.iter_mut().for_each(|v| *v = v.max(reg));
        model.means[c] = mean;
        model.variances[c] = var;
        model.weights[c] = nk / n as f64;
    }
    let total: f64 = model.weights.iter().sum();
    model.weights.iter_mut().for_each(|w| *w /= total);
}

fn kmeans_pp<R: Rng + ?Sized>(points: &Matrix, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centers = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = points.iter_rows().map(|x| squared_distance(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(idx).to_vec();
        for (di, x) in d2.iter_mut().zip(points.iter_rows()) {
            *di = di.min(squared_distance(x, &c));
        }
        centers.push(c);
    }
    centers
}

fn data_variance(points: &Matrix, covariance: CovarianceType, reg: f64) -> Vec<f64> {
    let (n, d) = (points.rows(), points.cols());
    let mut mean = vec![0.0; d];
    for x in points.iter_rows() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for x in points.iter_rows() {
        for ((v, xi), m) in var.iter_mut().zip(x).zip(&mean) {
            *v += (xi - m) * (xi - m);
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    if covariance == CovarianceType::Spherical {
        let avg = var.iter().sum::<f64>() / d as f64;
        var.iter_mut().for_each(|v| *v = avg);
    }
    var.iter_mut().for_each(|v| *v += reg);
    var
}

fn fit_once<R: Rng + ?Sized>(points: &Matrix, config: &GmmConfig, rng: &mut R) -> (GmmModel, Vec<f64>) {
    let n = points.rows();
    let data_var = data_variance(points, config.covariance, config.reg);
    let mut model = GmmModel {
        k: config.k,
        covariance: config.covariance,
        weights: vec![1.0 / config.k as f64; config.k],
        means: kmeans_pp(points, config.k, rng),
        variances: vec![data_var.clone(); config.k],
        train_loglik: f64::NEG_INFINITY,
    };
    let mut resp = Matrix::zeros(n, config.k);
    let mut point_ll = vec![0.0; n];
    let mut ll = e_step(&model, points, &mut resp, &mut point_ll);
    let mut trace = vec![ll];
    for _ in 0..config.max_iter {
        m_step(&mut model, points, &resp, &point_ll, config.reg, &data_var);
        let next = e_step(&model, points, &mut resp, &mut point_ll);
        trace.push(next);
        let converged = next - ll <= config.tol * ll.abs();
        ll = next;
        if converged {
            break;
        }
    }
    model.train_loglik = ll;
    (model, trace)
}

fn check_points(points: &Matrix, k: usize) -> Result<()> {
    if points.cols() == 0 {
        return Err(Error::invalid("gmm: points must have at least one dimension"));
    }
    if points.rows() < k {
        return Err(Error::invalid(format!(
            "gmm: need at least k = {k} points, got {}",
            points.rows()
        )));
    }
    if !points.is_finite() {
        return Err(Error::invalid("gmm: points contain non-finite values"));
    }
    Ok(())
}

/// Fits a mixture with `n_init` seeded restarts and returns the restart with
/// the highest final log-likelihood, along with every restart's trace.
pub fn fit_traced(points: &Matrix, config: &GmmConfig) -> Result<(GmmModel, FitTrace)> {
    config.validate()?;
    check_points(points, config.k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<GmmModel> = None;
    let mut trace = FitTrace::default();
    for _ in 0..config.n_init {
        let (model, t) = fit_once(points, config, &mut rng);
        trace.restarts.push(t);
        if best.as_ref().is_none_or(|b| model.train_loglik > b.train_loglik) {
            best = Some(model);
        }
    }
    Ok((best.expect("n_init >= 1"), trace))
}

pub fn fit(points: &Matrix, config: &GmmConfig) -> Result<GmmModel> {
    fit_traced(points, config).map(|(m, _)| m)
}

/// Bayesian information criterion of a fitted model on its training data.
pub fn bic(model: &GmmModel, n: usize) -> f64 {
    -2.0 * model.train_loglik * n as f64 + model.n_params() as f64 * (n as f64).ln()
}

/// Picks the candidate component count with the lowest BIC (first on ties).
pub fn select_k(points: &Matrix, candidates: &[usize], config: &GmmConfig) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("select_k: no candidates"));
    }
    let mut best = (f64::INFINITY, candidates[0]);
    for &k in candidates {
        let model = fit(points, &GmmConfig { k, ..config.clone() })?;
        let score = bic(&model, points.rows());
        if score < best.0 {
            best = (score, k);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in centers {
            for _ in 0..per {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                rows.push(vec![c[0] + sd * x, c[1] + sd * y]);
            }
        }
        Matrix::from_rows(&rows).unwrap()
    }

    fn model(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> GmmModel {
        GmmModel {
            k: weights.len(),
            covariance: CovarianceType::Diagonal,
            weights,
            means,
            variances,
            train_loglik: 0.0,
        }
    }

    #[test]
    fn standard_normal_log_pdf() {
        let m = model(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]);
        let want = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_pdf(&[0.0]).unwrap() - want).abs() < 1e-15);
        assert!((m.log_pdf(&[0.0]).unwrap() + 0.9189).abs() < 1e-4);
        assert!(m.log_pdf(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_mixture_log_pdf() {
        let m = model(
            vec![0.5, 0.5],
            vec![vec![1.5, -0.5], vec![-1.5, 0.5]],
            vec![vec![0.7, 2.0], vec![0.7, 2.0]],
        );
        for x in [[0.3, 0.1], [2.0, -4.0], [0.0, 0.0]] {
            let neg = [-x[0], -x[1]];
            assert!((m.log_pdf(&x).unwrap() - m.log_pdf(&neg).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn log_pdf_integrates_to_one() {
        let m = model(vec![0.3, 0.7], vec![vec![-1.0], vec![2.0]], vec![vec![0.25], vec![1.0]]);
        let (lo, hi, steps) = (-21.0, 22.0, 200_000);
        let h = (hi - lo) / steps as f64;
        // Simpson's rule
        let mut acc = 0.0;
        for i in 0..=steps {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * m.log_pdf(&[x]).unwrap().exp();
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_component_is_closed_form() {
        let pts = blobs(&[[3.0, -1.0]], 80, 2.0, 1);
        let cfg = GmmConfig { k: 1, ..GmmConfig::default() };
        let m = fit(&pts, &cfg).unwrap();
        for j in 0..2 {
            let col = pts.column(j);
            let mean = col.iter().sum::<f64>() / 80.0;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 80.0;
            assert!((m.means[0][j] - mean).abs() < 1e-8);
            assert!((m.variances[0][j] - var.max(cfg.reg)).abs() < 1e-8);
        }
        assert_eq!(m.weights, vec![1.0]);
    }

    #[test]
    fn recovers_two_blobs() {
        let pts = blobs(&[[-5.0, 0.0], [5.0, 0.0]], 200, 1.0, 2);
        let m = fit(&pts, &GmmConfig::default()).unwrap();
        let mut means = m.means.clone();
        means.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((means[0][0] + 5.0).abs() < 0.3 && means[0][1].abs() < 0.3);
        assert!((means[1][0] - 5.0).abs() < 0.3 && means[1][1].abs() < 0.3);
        assert!(m.weights.iter().all(|w| (w - 0.5).abs() < 0.05));
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let pts = blobs(&[[0.0, 0.0], [3.0, 3.0]], 30, 1.0, 3);
        let m = fit(&pts, &GmmConfig { k: 3, ..GmmConfig::default() }).unwrap();
        let r = m.responsibilities(&pts).unwrap();
        for row in r.iter_rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.variances.iter().flatten().all(|&v| v >= 1e-6));
    }

    #[test]
    fn spherical_variances_shared_across_dims() {
        let pts = blobs(&[[0.0, 0.0]], 50, 1.0, 4);
        let m = fit(&pts, &GmmConfig { covariance: CovarianceType::Spherical, ..GmmConfig::default() }).unwrap();
        for v in &m.variances {
            assert_eq!(v[0], v[1]);
        }
        assert_eq!(m.n_params(), 1 + 4 + 2);
    }

    #[test]
    fn translation_equivariance() {
        let pts = blobs(&[[0.0, 0.0], [4.0, 1.0]], 40, 1.0, 5);
        let shift = [100.0, -37.5];
        let mut moved = pts.clone();
        for i in 0..moved.rows() {
            moved.row_mut(i).iter_mut().zip(shift).for_each(|(x, s)| *x += s);
        }
        let cfg = GmmConfig::default();
        let a = fit(&pts, &cfg).unwrap();
        let b = fit(&moved, &cfg).unwrap();
        for c in 0..2 {
            for j in 0..2 {
                assert!((a.means[c][j] + shift[j] - b.means[c][j]).abs() < 1e-6);
                assert!((a.variances[c][j] - b.variances[c][j]).abs() < 1e-6);
            }
            assert!((a.weights[c] - b.weights[c]).abs() < 1e-6);
        }
    }

    #[test]
    fn errors() {
        let pts = blobs(&[[0.0, 0.0]], 3, 1.0, 6);
        assert!(fit(&pts, &GmmConfig { k: 4, ..GmmConfig::default() }).is_err());
        assert!(fit(&Matrix::zeros(5, 0), &GmmConfig::default()).is_err());
        assert!(fit(&pts, &GmmConfig { k: 0, ..GmmConfig::default() }).is_err());
        assert!(select_k(&pts, &[], &GmmConfig::default()).is_err());
    }

    #[test]
    fn sample_edge_cases() {
        let m = model(vec![0.5, 0.5], vec![vec![0.0], vec![10.0]], vec![vec![1e-6], vec![1e-6]]);
        assert_eq!(m.sample(0, 1).rows(), 0);
        let s = m.sample(1000, 2);
        for x in s.iter_rows() {
            let nearest = if x[0] < 5.0 { 0.0 } else { 10.0 };
            assert!((x[0] - nearest).abs() < 6.0 * 1e-3);
        }
        let longer = m.sample(1500, 2);
        assert_eq!(&longer.as_slice()[..1000], s.as_slice());
    }

    #[test]
    fn json_round_trip() {
        let pts = blobs(&[[0.0, 0.0], [3.0, 3.0]], 20, 1.0, 7);
        let m = fit(&pts, &GmmConfig::default()).unwrap();
        let json = m.to_json().unwrap();
        for key in ["\"k\"", "\"covariance\":\"diagonal\"", "\"weights\"", "\"means\"", "\"variances\"", "\"train_loglik\""] {
            assert!(json.contains(key), "{json}");
        }
        assert_eq!(GmmModel::from_json(&json).unwrap(), m);
        assert!(GmmModel::from_json(r#"{"k":1,"covariance":"diagonal","weights":[0.5],"means":[[0]],"variances":[[1]],"train_loglik":0}"#).is_err());
    }

    #[test]
    fn bic_selects_components() {
        let one = blobs(&[[0.0, 0.0]], 150, 0.5, 8);
        let two = blobs(&[[-10.0, 0.0], [10.0, 0.0]], 100, 1.0, 9);
        let cfg = GmmConfig::default();
        assert_eq!(select_k(&one, &[1, 2, 3], &cfg).unwrap(), 1);
        assert_eq!(select_k(&two, &[1, 2, 3], &cfg).unwrap(), 2);
        assert_eq!(select_k(&two, &[1], &cfg).unwrap(), 1);
    }
}
