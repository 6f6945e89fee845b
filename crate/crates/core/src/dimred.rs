//! RBF kernel PCA, and a linear 2D projection for plotting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, sym_eigen, Matrix};
use crate::lsa::fit_svd;

/// Default number of kernel PCA components.
pub const DEFAULT_COMPONENTS: usize = 100;
/// Eigenvalues at or below this are dropped.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;
const MAX_MEDIAN_PAIRS: usize = 100_000;

#[derive(Clone, Debug)]
pub struct KpcaModel {
    training: Matrix,
    gamma: f64,
    /// `n x r`, eigenvector columns scaled by `1/sqrt(eigenvalue)`.
    alphas: Matrix,
    eigenvalues: Vec<f64>,
    row_means: Vec<f64>,
    total_mean: f64,
    coordinates: Matrix,
    requested: usize,
}

impl KpcaModel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alphas(&self) -> &Matrix {
        &self.alphas
    }

    /// Number of components actually kept (may be below `requested`).
    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    /// Coordinates of the training points, computed at fit time.
    pub fn coordinates(&self) -> &Matrix {
        &self.coordinates
    }

    pub fn input_dim(&self) -> usize {
        self.training.cols()
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        rbf(self.gamma, a, b)
    }

    /// Kernel row of `x` against the training points, centered with the
    /// stored statistics.
    pub fn centered_kernel_row(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self.training.iter_rows().map(|t| self.kernel(x, t)).collect();
        let mean = k.iter().sum::<f64>() / k.len() as f64;
        k.iter()
            .zip(&self.row_means)
            .map(|(kij, rm)| kij - mean - rm + self.total_mean)
            .collect()
    }

    pub fn project_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let kc = self.centered_kernel_row(x);
        let r = self.components();
        let mut out = vec![0.0; r];
        for (i, k) in kc.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.alphas.row(i)) {
                *o += a * k;
            }
        }
        Ok(out)
    }
}

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// `1 / median(‖x_i - x_j‖²)` over all pairs, or over a seeded sample of
/// 100,000 pairs when there are more.
pub fn median_heuristic_gamma(points: &Matrix, seed: u64) -> Result<f64> {
    let n = points.rows();
    if n < 2 {
        return Err(Error::invalid("median heuristic needs at least two points"));
    }
    let pairs = n * (n - 1) / 2;
    let mut d: Vec<f64> = if pairs <= MAX_MEDIAN_PAIRS {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| squared_distance(points.row(i), points.row(j)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..MAX_MEDIAN_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                squared_distance(points.row(i), points.row(j))
            })
            .collect()
    };
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len().is_multiple_of(2) { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    if median <= 0.0 {
        return Err(Error::DegenerateKernel("median pairwise distance is zero".into()));
    }
    Ok(1.0 / median)
}

/// RBF kernel matrix; entry (i, j) is evaluated once and mirrored so the
/// result is exactly symmetric.
pub fn kernel_matrix(points: &Matrix, gamma: f64) -> Matrix {
    let n = points.rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| rbf(gamma, points.row(i), points.row(j))).collect())
        .collect();
    let mut k = Matrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    k
}

/// Double-centers a kernel matrix, returning it with its row means and grand
/// mean.
pub fn center_kernel(k: &Matrix) -> (Matrix, Vec<f64>, f64) {
    let n = k.rows();
    let row_means: Vec<f64> = k.iter_rows().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let total = row_means.iter().sum::<f64>() / n as f64;
    let mut c = k.clone();
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = k[(i, j)] - row_means[i] - row_means[j] + total;
        }
    }
    (c, row_means, total)
}

/// Fits RBF kernel PCA with up to `components` components.
///
/// `gamma` defaults to the median heuristic. Components whose eigenvalue is
/// not above [`EIGENVALUE_FLOOR`] are dropped.
pub fn fit_kpca(points: &Matrix, components: usize, gamma: Option<f64>, seed: u64) -> Result<KpcaModel> {
    let n = points.rows();
    if components >= n {
        return Err(Error::invalid(format!(
            "kernel PCA needs components < rows ({components} >= {n})"
        )));
    }
    if !points.is_finite() {
        return Err(Error::invalid("points contain non-finite values"));
    }
    if (1..n).all(|i| points.row(i) == points.row(0)) {
        return Err(Error::DegenerateKernel("all points are identical".into()));
    }
    let gamma = match gamma {
        Some(g) if g > 0.0 && g.is_finite() => g,
        Some(g) => return Err(Error::invalid(format!("gamma must be positive, got {g}"))),
        None => median_heuristic_gamma(points, seed)?,
    };
    let k = kernel_matrix(points, gamma);
    let (centered, row_means, total_mean) = center_kernel(&k);
    let eig = sym_eigen(&centered)?;
    let kept: Vec<usize> = (0..components).filter(|&j| eig.values[j] > EIGENVALUE_FLOOR).collect();
    let r = kept.len();
    let mut alphas = Matrix::zeros(n, r);
    let mut coordinates = Matrix::zeros(n, r);
    let mut eigenvalues = Vec::with_capacity(r);
    for (c, &j) in kept.iter().enumerate() {
        let lambda = eig.values[j];
        let root = lambda.sqrt();
        eigenvalues.push(lambda);
        for i in 0..n {
            let v = eig.vectors[(i, j)];
            alphas[(i, c)] = v / root;
            coordinates[(i, c)] = v * root;
        }
    }
    Ok(KpcaModel {
        training: points.clone(),
        gamma,
        alphas,
        eigenvalues,
        row_means,
        total_mean,
        coordinates,
        requested: components,
    })
}

pub fn project_kpca(model: &KpcaModel, matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    if matrix.dim() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: matrix.dim(),
        });
    }
    let rows: Vec<Vec<f64>> = (0..matrix.len())
        .into_par_iter()
        .map(|i| model.project_point(matrix.row(i)))
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(rows.len() * model.components());
    rows.into_iter().for_each(|r| data.extend(r));
    EmbeddingMatrix::new(
        matrix.doc_ids().to_vec(),
        Matrix::from_vec(matrix.len(), model.components(), data)?,
    )
}

/// Centers the data and projects it onto its top two principal axes.
pub fn project_2d(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let (n, d) = (matrix.len(), matrix.dim());
    if n < 2 {
        return Err(Error::invalid("2D projection needs at least two rows"));
    }
    let mut means = vec![0.0; d];
    for i in 0..n {
        for (m, v) in means.iter_mut().zip(matrix.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = matrix.vectors().clone();
    for i in 0..n {
        for (x, m) in centered.row_mut(i).iter_mut().zip(&means) {
            *x -= m;
        }
    }
    let rank = 2.min(n).min(d);
    let svd = fit_svd(&centered, rank)?;
    let projected = svd.project_matrix(&centered)?;
    let mut out = Matrix::zeros(n, 2);
    for i in 0..n {
        out.row_mut(i)[..rank].copy_from_slice(projected.row(i));
    }
    EmbeddingMatrix::new(matrix.doc_ids().to_vec(), out)
}

/// Writes a 2D projection as `id,x,y`.
pub fn write_2d_csv<W: std::io::Write>(matrix: &EmbeddingMatrix, mut out: W) -> Result<()> {
    if matrix.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: matrix.dim(),
        });
    }
    writeln!(out, "id,x,y")?;
    for (i, id) in matrix.doc_ids().iter().enumerate() {
        crate::embedding::write_csv_field(&mut out, id)?;
        let r = matrix.row(i);
        writeln!(out, ",{:.16e},{:.16e}", r[0], r[1])?;
    }
    Ok(())
}
