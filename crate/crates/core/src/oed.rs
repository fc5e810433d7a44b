//! Linear-regression experimental design.
//!
//! For a linear response `y = βᵀx + ε` fitted by least squares on the
//! columns of `X`, the expected squared weight error is `σ_ε² tr(Σ⁻¹)` with
//! `Σ = XXᵀ`. Adding one image `x` lowers that trace by
//! `xᵀΣ⁻²x / (1 + xᵀΣ⁻¹x)`, so the best next image maximizes this ratio.
//! [`CovarianceState`] keeps `Σ⁻¹` current with rank-one updates so the
//! ratio can be scored without re-inverting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge used to make `Σ` invertible before `K` images have been seen.
pub const DEFAULT_RIDGE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    count: usize,
    ridge: f64,
}

/// Response noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_eps_sq: f64,
}

impl NoiseModel {
    pub fn new(sigma_eps_sq: f64) -> Result<Self> {
        if !(sigma_eps_sq >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be >= 0, got {sigma_eps_sq}"
            )));
        }
        Ok(NoiseModel { sigma_eps_sq })
    }

    pub fn noiseless() -> Self {
        NoiseModel { sigma_eps_sq: 0.0 }
    }

    pub fn variance(&self) -> f64 {
        self.sigma_eps_sq
    }
}

impl CovarianceState {
    /// `Σ = λI` with no accumulated vectors.
    pub fn new(dim: usize, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ridge must be > 0 for an invertible start, got {ridge}"
            )));
        }
        Ok(CovarianceState {
            sigma: DMatrix::identity(dim, dim) * ridge,
            sigma_inv: DMatrix::identity(dim, dim) / ridge,
            count: 0,
            ridge,
        })
    }

    /// Builds from an explicit covariance (used for tests and diagonal cases).
    pub fn from_sigma(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != sigma.ncols() {
            return Err(Error::InvalidArgument("sigma must be square".into()));
        }
        let sigma_inv = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("sigma is not positive definite".into()))?
            .inverse();
        Ok(CovarianceState {
            sigma,
            sigma_inv,
            count: 0,
            ridge: 0.0,
        })
    }

    /// `λI + Σ xᵢxᵢᵀ` over `vectors`, inverted once by Cholesky.
    pub fn from_vectors(vectors: &[Vec<f64>], ridge: f64) -> Result<Self> {
        let dim = vectors.first().ok_or(Error::Empty("vectors"))?.len();
        let x = columns(vectors, dim)?;
        let sigma = &x * x.transpose() + DMatrix::identity(dim, dim) * ridge;
        let mut state = Self::from_sigma(sigma)?;
        state.count = vectors.len();
        state.ridge = ridge;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `xᵀΣ⁻²x / (1 + xᵀΣ⁻¹x)` via a single product `v = Σ⁻¹x`.
    pub fn objective_next(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let xv = DVector::from_column_slice(x);
        let v = &self.sigma_inv * &xv;
        Ok(v.dot(&v) / (1.0 + xv.dot(&v)))
    }

    /// Sherman-Morrison rank-one update in place.
    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        let xv = DVector::from_column_slice(x);
        let u = &self.sigma_inv * &xv;
        let denom = 1.0 + xv.dot(&u);
        self.sigma.ger(1.0, &xv, &xv, 1.0);
        self.sigma_inv.ger(-1.0 / denom, &u, &u, 1.0);
        self.count += 1;
        Ok(())
    }

    /// Functional form of [`CovarianceState::update`].
    pub fn sm_update(&self, x: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.update(x)?;
        Ok(next)
    }

    /// `σ_ε² tr(Σ⁻¹)`.
    pub fn expected_beta_error(&self, noise: &NoiseModel) -> f64 {
        noise.variance() * self.sigma_inv.trace()
    }

    /// Pool index maximizing [`CovarianceState::objective_next`]; lowest index on ties.
    pub fn select_next_from_pool(&self, pool: &[Vec<f64>]) -> Result<usize> {
        if pool.is_empty() {
            return Err(Error::Empty("pool"));
        }
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in pool.iter().enumerate() {
            let score = self.objective_next(x)?;
            if score > best.1 {
                best = (i, score);
            }
        }
        Ok(best.0)
    }
}

/// Objective for the diagonal case: `Σₖ xₖ² / σₖ²`.
pub fn objective_uncorrelated(x: &[f64], sigmas_sq: &[f64]) -> Result<f64> {
    if x.len() != sigmas_sq.len() {
        return Err(Error::DimensionMismatch {
            expected: sigmas_sq.len(),
            got: x.len(),
        });
    }
    if let Some(bad) = sigmas_sq.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "nonpositive variance {bad}"
        )));
    }
    Ok(x.iter().zip(sigmas_sq).map(|(a, s)| a * a / s).sum())
}

fn columns(vectors: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        m.column_mut(j).copy_from_slice(v);
    }
    Ok(m)
}

/// Per-component variances, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSpectrum {
    pub variances: Vec<f64>,
}

impl VarianceSpectrum {
    pub fn components(&self) -> usize {
        self.variances.len()
    }

    pub fn total(&self) -> f64 {
        self.variances.iter().sum()
    }
}

/// Mean-subtracted data matrix with samples as columns.
fn centered_columns(vectors: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if vectors.len() < 2 {
        return Err(Error::InvalidArgument(
            "PCA needs at least 2 vectors".into(),
        ));
    }
    let dim = vectors[0].len();
    let mut x = columns(vectors, dim)?;
    let mean = x.column_mean();
    for mut col in x.column_iter_mut() {
        col -= &mean;
    }
    Ok(x)
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Top-`n` eigenvalues of the sample covariance (divided by `N − 1`).
///
/// With fewer samples than dimensions the eigenvalues come from the `N × N`
/// Gram matrix, which shares the covariance's nonzero spectrum.
pub fn pca_variance_spectrum(vectors: &[Vec<f64>], n: usize) -> Result<VarianceSpectrum> {
    let x = centered_columns(vectors)?;
    let (dim, count) = x.shape();
    if n > dim {
        return Err(Error::InvalidArgument(format!(
            "{n} components requested from {dim} dimensions"
        )));
    }
    let scale = 1.0 / (count as f64 - 1.0);
    let gram_form = count < dim;
    let m = if gram_form {
        x.transpose() * &x * scale
    } else {
        &x * x.transpose() * scale
    };
    let eig = m.symmetric_eigenvalues();
    let mut values = sorted_desc(eig.iter().map(|&v| v.max(0.0)).collect());
    values.resize(dim.max(values.len()), 0.0);
    values.truncate(n);
    Ok(VarianceSpectrum { variances: values })
}

/// Sample-covariance trace, the quantity a full spectrum must conserve.
pub fn total_variance(vectors: &[Vec<f64>]) -> Result<f64> {
    let x = centered_columns(vectors)?;
    let n = x.ncols() as f64;
    Ok(x.iter().map(|v| v * v).sum::<f64>() / (n - 1.0))
}

/// Componentwise ratio of the gaudy spectrum to the normal spectrum, each
/// from its own PCA basis.
pub fn variance_ratio_curve(normal: &[Vec<f64>], gaudy: &[Vec<f64>], n: usize) -> Result<Vec<f64>> {
    let (dn, dg) = (
        normal.first().map_or(0, Vec::len),
        gaudy.first().map_or(0, Vec::len),
    );
    if dn != dg {
        return Err(Error::DimensionMismatch {
            expected: dn,
            got: dg,
        });
    }
    let a = pca_variance_spectrum(normal, n)?;
    let b = pca_variance_spectrum(gaudy, n)?;
    a.variances
        .iter()
        .zip(&b.variances)
        .enumerate()
        .map(|(i, (den, num))| {
            if *den <= 0.0 {
                Err(Error::InvalidArgument(format!(
                    "zero normal variance at component {i}"
                )))
            } else {
                Ok(num / den)
            }
        })
        .collect()
}

/// Fitted principal axes, used to build projections.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// Rows are unit principal axes, ordered by descending variance.
    pub components: DMatrix<f64>,
    pub variances: Vec<f64>,
}

impl Pca {
    /// Fits the top-`n` axes of the columns of `data` via the covariance.
    pub fn fit(data: &DMatrix<f64>, n: usize) -> Result<Self> {
        let (dim, count) = data.shape();
        if count < 2 {
            return Err(Error::InvalidArgument(
                "PCA needs at least 2 samples".into(),
            ));
        }
        if n > dim {
            return Err(Error::InvalidArgument(format!(
                "{n} components requested from {dim} dimensions"
            )));
        }
        let mean = data.column_mean();
        let mut x = data.clone();
        for mut col in x.column_iter_mut() {
            col -= &mean;
        }
        let cov = &x * x.transpose() / (count as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let mut components = DMatrix::zeros(n, dim);
        let mut variances = Vec::with_capacity(n);
        for (row, &idx) in order.iter().take(n).enumerate() {
            let mut axis = eig.eigenvectors.column(idx).into_owned();
            // deterministic sign: largest-magnitude entry positive
            let imax = axis.iamax();
            if axis[imax] < 0.0 {
                axis = -axis;
            }
            components.row_mut(row).copy_from(&axis.transpose());
            variances.push(eig.eigenvalues[idx].max(0.0));
        }
        Ok(Pca {
            mean,
            components,
            variances,
        })
    }

    /// Projects the columns of `data` onto the axes.
    pub fn project(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = data.clone();
        for mut col in x.column_iter_mut() {
            col -= &self.mean;
        }
        &self.components * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> CovarianceState {
        CovarianceState::from_sigma(DMatrix::from_diagonal(&DVector::from_column_slice(v))).unwrap()
    }

    #[test]
    fn objective_examples() {
        let id = diag(&[1.0, 1.0, 1.0]);
        assert_eq!(id.objective_next(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(id.objective_next(&[1.0, 0.0, 0.0]).unwrap(), 0.5);
        // Σ = diag(1,4), x = (1,1): Σ⁻¹x = (1, 1/4); numerator 1 + 1/16, denom 1 + 1 + 1/4
        let d = diag(&[1.0, 4.0]);
        let expected = (1.0 + 1.0 / 16.0) / (1.0 + 1.0 + 0.25);
        assert_relative_eq!(
            d.objective_next(&[1.0, 1.0]).unwrap(),
            expected,
            epsilon = 1e-15
        );
        assert_relative_eq!(expected, 0.472_222_222_222_222_2, epsilon = 1e-12);
        assert!(matches!(
            d.objective_next(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uncorrelated_objective_examples() {
        assert_eq!(
            objective_uncorrelated(&[0.0, 0.0], &[2.0, 3.0]).unwrap(),
            0.0
        );
        assert_eq!(
            objective_uncorrelated(&[3.0, 4.0], &[1.0, 1.0]).unwrap(),
            25.0
        );
        assert_eq!(
            objective_uncorrelated(&[2.0, 3.0], &[4.0, 9.0]).unwrap(),
            2.0
        );
        assert!(objective_uncorrelated(&[1.0], &[0.0]).is_err());
        assert!(objective_uncorrelated(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn sm_update_examples() {
        let s = diag(&[1.0, 1.0]).sm_update(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(s.sigma_inv()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.sigma_inv()[(1, 1)], 1.0, epsilon = 1e-15);
        assert_eq!(s.sigma_inv()[(0, 1)], 0.0);

        let base = CovarianceState::new(3, DEFAULT_RIDGE).unwrap();
        let z = base.sm_update(&[0.0; 3]).unwrap();
        assert_eq!(z.sigma(), base.sigma());
        assert_eq!(z.sigma_inv(), base.sigma_inv());
        assert_eq!(z.count(), 1);
        assert!(base.sm_update(&[1.0]).is_err());
    }

    #[test]
    fn expected_error_examples() {
        let noise = NoiseModel::new(1.0).unwrap();
        assert_eq!(diag(&[1.0, 1.0, 1.0]).expected_beta_error(&noise), 3.0);
        assert_eq!(
            diag(&[1.0, 1.0]).expected_beta_error(&NoiseModel::noiseless()),
            0.0
        );
        let two = NoiseModel::new(2.0).unwrap();
        assert_relative_eq!(
            diag(&[2.0, 4.0]).expected_beta_error(&two),
            1.5,
            epsilon = 1e-15
        );
        assert!(NoiseModel::new(-1.0).is_err());
    }

    #[test]
    fn trace_drop_equals_objective() {
        // tr(Σ⁻¹) − tr((Σ + xxᵀ)⁻¹) equals the objective for that x.
        let mut rng = Stream::new(17);
        let mut s = CovarianceState::new(6, 0.5).unwrap();
        for _ in 0..4 {
            let x: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
            s.update(&x).unwrap();
        }
        let x: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let noise = NoiseModel::new(1.0).unwrap();
        let before = s.expected_beta_error(&noise);
        let after = s.sm_update(&x).unwrap().expected_beta_error(&noise);
        assert_relative_eq!(
            before - after,
            s.objective_next(&x).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn pool_selection_examples() {
        let id = diag(&[1.0, 1.0]);
        assert_eq!(id.select_next_from_pool(&[vec![0.3, 0.1]]).unwrap(), 0);
        assert_eq!(
            id.select_next_from_pool(&[vec![1.0, 0.0], vec![2.0, 0.0]])
                .unwrap(),
            1
        );
        assert_eq!(
            id.select_next_from_pool(&[vec![1.0, 0.0], vec![0.0, 1.0]])
                .unwrap(),
            0
        );
        assert!(matches!(
            id.select_next_from_pool(&[]),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn pca_rank_one_data() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let s = pca_variance_spectrum(&pts, 2).unwrap();
        assert!(s.variances[0] > 0.0);
        assert!(s.variances[1].abs() < 1e-10);
        assert!(pca_variance_spectrum(&pts, 3).is_err());
    }

    #[test]
    fn pca_closed_form_two_by_two() {
        // points (0,0), (2,0), (0,1), (2,1): cov = [[4/3, 0],[0, 1/3]]
        let pts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 1.0],
        ];
        let s = pca_variance_spectrum(&pts, 2).unwrap();
        assert_relative_eq!(s.variances[0], 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.variances[1], 1.0 / 3.0, epsilon = 1e-12);
        // correlated set: (0,0), (1,1), (2,1), (3,2)
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![2.0, 1.0],
            vec![3.0, 2.0],
        ];
        let (a, b, d): (f64, f64, f64) = (5.0 / 3.0, 1.0, 2.0 / 3.0); // cov [[a,b],[b,d]]
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        let s = pca_variance_spectrum(&pts, 2).unwrap();
        assert_relative_eq!(s.variances[0], (tr + disc) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.variances[1], (tr - disc) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_and_covariance_forms_agree() {
        let mut rng = Stream::new(5);
        let wide: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..10).map(|_| rng.normal()).collect())
            .collect();
        let gram = pca_variance_spectrum(&wide, 10).unwrap();
        // covariance form computed directly
        let x = centered_columns(&wide).unwrap();
        let cov = &x * x.transpose() / 5.0;
        let direct = sorted_desc(cov.symmetric_eigenvalues().iter().copied().collect());
        for (g, d) in gram.variances.iter().zip(&direct) {
            assert!((g - d.max(0.0)).abs() < 1e-10);
        }
        assert_relative_eq!(
            gram.total(),
            total_variance(&wide).unwrap(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn isotropic_data_has_unit_variances() {
        let mut rng = Stream::new(8);
        let pts: Vec<Vec<f64>> = (0..4000)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let s = pca_variance_spectrum(&pts, 4).unwrap();
        for v in s.variances {
            assert!((v - 1.0).abs() < 0.12, "{v}");
        }
    }

    #[test]
    fn ratio_curve_examples() {
        let mut rng = Stream::new(2);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..5).map(|_| rng.normal()).collect())
            .collect();
        let same = variance_ratio_curve(&pts, &pts, 5).unwrap();
        assert!(same.iter().all(|r| (r - 1.0).abs() < 1e-12));
        let doubled: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().map(|v| 2.0 * v).collect())
            .collect();
        let four = variance_ratio_curve(&pts, &doubled, 5).unwrap();
        assert!(four.iter().all(|r| (r - 4.0).abs() < 1e-9));
        let line: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 0.0]).collect();
        assert!(variance_ratio_curve(&line, &line, 2).is_err());
    }

    #[test]
    fn pca_projection_orders_variance() {
        let mut rng = Stream::new(12);
        let data = DMatrix::from_fn(3, 500, |r, _| rng.normal() * (3.0 - r as f64));
        let pca = Pca::fit(&data, 3).unwrap();
        let proj = pca.project(&data);
        let var = |row: usize| {
            let r = proj.row(row);
            let m = r.mean();
            r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 499.0
        };
        assert!(var(0) > var(1) && var(1) > var(2));
        assert_relative_eq!(var(0), pca.variances[0], max_relative = 1e-9);
    }
}
