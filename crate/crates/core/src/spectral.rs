//! Sample covariance and PCA one-factor estimation for T << N panels.
//!
//! The sample covariance is S = R R^T / T with NO mean subtraction: the
//! generating model has mean-zero returns, and demeaning would change both
//! the spectrum and the bias analysis. This is deliberate and differs from
//! most covariance code.
//!
//! The leading eigenpair is computed through the T x T Gram matrix
//! G = R^T R / T whenever T < N: the nonzero spectra of S and G agree, and
//! the leading eigenvector of S is recovered as R v / ||R v||. This keeps the
//! cost at O(N T^2 + T^3) instead of O(N^3).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{orient, EstimatedFactorModel, ReferenceVector, ReturnsPanel};

/// Relative floor applied to specific variances, times the mean sample
/// variance. Residual variances from the rank-one fit can be nonpositive in
/// finite samples; the floor keeps the estimated model positive definite.
pub const SPECIFIC_VARIANCE_FLOOR_REL: f64 = 1e-10;

/// Leading eigenpair of the sample covariance, plus its trace.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Largest eigenvalue of S (the factor variance estimate), per period.
    pub leading_eigenvalue: f64,
    /// Unit leading eigenvector, oriented toward z.
    pub leading_eigenvector: DVector<f64>,
    /// Tr(S), retained for the specific-variance estimator.
    pub trace: f64,
}

/// Implicit view of S = R R^T / T: products, diagonal and trace without
/// materializing N x N when T < N.
pub struct SampleCovariance<'a> {
    panel: &'a ReturnsPanel,
    diagonal: DVector<f64>,
    trace: f64,
    dense: Option<DMatrix<f64>>,
}

impl<'a> SampleCovariance<'a> {
    pub fn new(panel: &'a ReturnsPanel) -> Result<Self> {
        let r = panel.matrix();
        let (n, t) = r.shape();
        if n == 0 || t == 0 {
            return Err(Error::DegeneratePanel("empty panel".into()));
        }
        let tf = t as f64;
        let mut diagonal = DVector::zeros(n);
        for col in r.column_iter() {
            for i in 0..n {
                diagonal[i] += col[i] * col[i];
            }
        }
        diagonal /= tf;
        let trace = diagonal.sum();
        // Dense path only when it is the smaller object.
        let dense = if t >= n {
            Some(r * r.transpose() / tf)
        } else {
            None
        };
        Ok(Self {
            panel,
            diagonal,
            trace,
            dense,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.panel.n_assets()
    }

    pub fn n_obs(&self) -> usize {
        self.panel.n_obs()
    }

    /// S x, computed as R (R^T x) / T on the implicit path.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_assets() {
            return Err(Error::DimensionMismatch {
                expected: self.n_assets(),
                actual: x.len(),
            });
        }
        if let Some(s) = &self.dense {
            return Ok(s * x);
        }
        let r = self.panel.matrix();
        let proj = r.tr_mul(x);
        Ok(r * proj / self.n_obs() as f64)
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.diagonal
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Materialize S (test oracles and small N).
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.dense {
            Some(s) => s.clone(),
            None => {
                let r = self.panel.matrix();
                r * r.transpose() / self.n_obs() as f64
            }
        }
    }
}

/// Leading eigenpair of S, oriented toward z.
///
/// Uses the Gram path when T < N and a dense symmetric eigendecomposition
/// otherwise. Errors if the panel carries no variance.
pub fn leading_eigenpair(panel: &ReturnsPanel) -> Result<SpectralResult> {
    let r = panel.matrix();
    let (n, t) = r.shape();
    let z = ReferenceVector::new(n)?;
    let tf = t as f64;

    let trace = r.iter().map(|x| x * x).sum::<f64>() / tf;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::DegeneratePanel(format!(
            "sample covariance trace = {trace}"
        )));
    }

    let (lambda1, u1) = if t < n {
        let gram = r.tr_mul(r) / tf;
        let eigen = gram.symmetric_eigen();
        let (idx, lambda1) = argmax(&eigen.eigenvalues);
        let v1 = eigen.eigenvectors.column(idx).into_owned();
        let mut u1 = r * v1;
        let norm = u1.norm();
        if !(norm > 0.0) || !(lambda1 > 0.0) {
            return Err(Error::DegeneratePanel(
                "leading eigenvalue is numerically zero".into(),
            ));
        }
        u1 /= norm;
        (lambda1, u1)
    } else {
        let s = r * r.transpose() / tf;
        let eigen = s.symmetric_eigen();
        let (idx, lambda1) = argmax(&eigen.eigenvalues);
        if !(lambda1 > 0.0) {
            return Err(Error::DegeneratePanel(
                "leading eigenvalue is numerically zero".into(),
            ));
        }
        (lambda1, eigen.eigenvectors.column(idx).into_owned())
    };

    // renormalize before the unit-norm check; accumulated rounding in the
    // eigensolver can sit slightly above the model tolerance
    let norm = u1.norm();
    let oriented = orient(u1 / norm, &z)?;
    Ok(SpectralResult {
        leading_eigenvalue: lambda1,
        leading_eigenvector: oriented,
        trace,
    })
}

fn argmax(values: &DVector<f64>) -> (usize, f64) {
    let mut idx = 0;
    let mut best = values[0];
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            idx = i;
        }
    }
    (idx, best)
}

/// Specific-variance floor for a given sample diagonal.
pub fn specific_variance_floor(diag: &DVector<f64>) -> f64 {
    (SPECIFIC_VARIANCE_FLOOR_REL * diag.mean()).max(f64::MIN_POSITIVE)
}

/// Floored diagonal of S - sigma2 * b b^T.
pub fn residual_specific_variances(
    diag: &DVector<f64>,
    factor_variance: f64,
    exposures: &DVector<f64>,
    floor: f64,
) -> DVector<f64> {
    DVector::from_fn(diag.len(), |i, _| {
        (diag[i] - factor_variance * exposures[i] * exposures[i]).max(floor)
    })
}

/// Plain PCA one-factor estimate: sigma2 = lambda1, exposures = oriented
/// leading eigenvector, specific variances = floored rank-one residual
/// diagonal.
pub fn pca_estimate(panel: &ReturnsPanel) -> Result<EstimatedFactorModel> {
    let stats = SampleCovariance::new(panel)?;
    let spectral = leading_eigenpair(panel)?;
    pca_from_parts(&spectral, stats.diagonal())
}

/// Assemble the PCA model from precomputed spectral parts.
pub fn pca_from_parts(
    spectral: &SpectralResult,
    diag: &DVector<f64>,
) -> Result<EstimatedFactorModel> {
    let floor = specific_variance_floor(diag);
    let specific = residual_specific_variances(
        diag,
        spectral.leading_eigenvalue,
        &spectral.leading_eigenvector,
        floor,
    );
    EstimatedFactorModel::new(
        spectral.leading_eigenvalue,
        spectral.leading_eigenvector.clone(),
        specific,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{concentration, FactorModelSpec, ReferenceVector};
    use crate::rng::{standard_normal_vector, stream_rng, unit_sphere_vector};
    use crate::simgen::{build_market_beta, simulate_returns, CalibrationConfig};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn random_panel(n: usize, t: usize, seed: u64) -> ReturnsPanel {
        let mut rng = stream_rng(seed, &[100]);
        let data = DMatrix::from_fn(n, t, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        ReturnsPanel::from_matrix(data).unwrap()
    }

    #[test]
    fn single_observation_is_rank_one() {
        let mut rng = stream_rng(1, &[0]);
        let r = standard_normal_vector(12, &mut rng);
        let panel =
            ReturnsPanel::from_matrix(DMatrix::from_column_slice(12, 1, r.as_slice())).unwrap();
        let stats = SampleCovariance::new(&panel).unwrap();
        assert_relative_eq!(stats.trace(), r.norm_squared(), max_relative = 1e-12);
        let dense = stats.to_dense();
        let expected = &r * r.transpose();
        assert!((dense - expected).amax() < 1e-12);
    }

    #[test]
    fn implicit_products_match_dense() {
        let panel = random_panel(50, 20, 2);
        let stats = SampleCovariance::new(&panel).unwrap();
        let dense = stats.to_dense();
        let mut rng = stream_rng(3, &[0]);
        for _ in 0..20 {
            let x = standard_normal_vector(50, &mut rng);
            let implicit = stats.apply(&x).unwrap();
            let direct = &dense * &x;
            assert!((implicit - direct).amax() < 1e-12);
        }
        for i in 0..50 {
            assert_relative_eq!(stats.diagonal()[i], dense[(i, i)], max_relative = 1e-12);
        }
        assert_relative_eq!(
            stats.trace(),
            dense.diagonal().sum(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_panel_is_degenerate() {
        let panel = ReturnsPanel::from_matrix(DMatrix::zeros(6, 4)).unwrap();
        let stats = SampleCovariance::new(&panel).unwrap();
        assert_eq!(stats.trace(), 0.0);
        assert!(stats.to_dense().amax() == 0.0);
        assert!(matches!(
            leading_eigenpair(&panel),
            Err(Error::DegeneratePanel(_))
        ));
    }

    #[test]
    fn repeated_column_gives_exact_eigenpair() {
        let mut rng = stream_rng(4, &[0]);
        let mut r = standard_normal_vector(15, &mut rng);
        // orient the generating vector toward z so the comparison is direct
        let z = ReferenceVector::new(15).unwrap();
        if z.dot(&r).unwrap() < 0.0 {
            r = -r;
        }
        let t = 7;
        let mut data = DMatrix::zeros(15, t);
        for c in 0..t {
            data.set_column(c, &r);
        }
        let panel = ReturnsPanel::from_matrix(data).unwrap();
        let res = leading_eigenpair(&panel).unwrap();
        assert_relative_eq!(res.leading_eigenvalue, r.norm_squared(), max_relative = 1e-10);
        let unit = &r / r.norm();
        assert!((res.leading_eigenvector - unit).amax() < 1e-10);
    }

    #[test]
    fn gram_path_matches_dense_eigensolver() {
        let panel = random_panel(40, 15, 5);
        let res = leading_eigenpair(&panel).unwrap();
        let dense = SampleCovariance::new(&panel).unwrap().to_dense();
        let eigen = dense.symmetric_eigen();
        let (idx, lambda) = {
            let mut idx = 0;
            let mut best = eigen.eigenvalues[0];
            for (i, &v) in eigen.eigenvalues.iter().enumerate() {
                if v > best {
                    best = v;
                    idx = i;
                }
            }
            (idx, best)
        };
        assert_relative_eq!(res.leading_eigenvalue, lambda, max_relative = 1e-8);
        let v = eigen.eigenvectors.column(idx).into_owned();
        let cosine = res.leading_eigenvector.dot(&v).abs();
        assert!(cosine >= 1.0 - 1e-10, "cosine = {cosine}");
    }

    #[test]
    fn gram_and_dense_agree_across_shapes() {
        for &(n, t) in &[(30usize, 10usize), (60, 25), (100, 40), (20, 30)] {
            let panel = random_panel(n, t, 1000 + (n + t) as u64);
            let res = leading_eigenpair(&panel).unwrap();
            let dense = SampleCovariance::new(&panel).unwrap().to_dense();
            let eigen = dense.symmetric_eigen();
            let lambda = eigen.eigenvalues.max();
            assert_relative_eq!(res.leading_eigenvalue, lambda, max_relative = 1e-8);
            // residual check: ||S u - lambda u|| / lambda small
            let stats = SampleCovariance::new(&panel).unwrap();
            let resid = stats.apply(&res.leading_eigenvector).unwrap()
                - res.leading_eigenvalue * &res.leading_eigenvector;
            assert!(resid.norm() / res.leading_eigenvalue < 1e-10);
        }
    }

    #[test]
    fn orientation_holds_on_random_panels() {
        for seed in 0..100 {
            let panel = random_panel(25, 8, 2000 + seed);
            let res = leading_eigenpair(&panel).unwrap();
            let z = ReferenceVector::new(25).unwrap();
            assert!(z.dot(&res.leading_eigenvector).unwrap() >= 0.0);
        }
    }

    #[test]
    fn leading_eigenvalue_bounded_by_trace() {
        for seed in 0..20 {
            let panel = random_panel(30, 12, 3000 + seed);
            let res = leading_eigenpair(&panel).unwrap();
            assert!(res.leading_eigenvalue <= res.trace * (1.0 + 1e-12));
        }
    }

    #[test]
    fn noiseless_one_factor_recovers_exposures() {
        let n = 60;
        let mut rng = stream_rng(6, &[0]);
        let beta = build_market_beta(n, 0.85, &mut rng).unwrap();
        let model = FactorModelSpec::new(
            DMatrix::from_column_slice(n, 1, beta.as_slice()),
            DVector::from_element(1, 4.0),
            DVector::from_element(n, 1e-300),
        )
        .unwrap();
        let panel = simulate_returns(&model, 20, &mut rng).unwrap();
        let est = pca_estimate(&panel).unwrap();
        let cosine = concentration(est.exposures(), &beta).unwrap().abs();
        assert!(cosine > 1.0 - 1e-8, "cosine = {cosine}");
        // residual specific variances collapse to the floor
        let floor = specific_variance_floor(SampleCovariance::new(&panel).unwrap().diagonal());
        for &d in est.specific_variances().iter() {
            assert!(d <= floor * 1e6 + 1e-12);
        }
    }

    #[test]
    fn residual_diagonal_matches_dense_computation() {
        let panel = random_panel(50, 18, 7);
        let stats = SampleCovariance::new(&panel).unwrap();
        let spectral = leading_eigenpair(&panel).unwrap();
        let est = pca_from_parts(&spectral, stats.diagonal()).unwrap();
        let dense = stats.to_dense();
        let b = &spectral.leading_eigenvector;
        let floor = specific_variance_floor(stats.diagonal());
        for i in 0..50 {
            let expected = (dense[(i, i)] - spectral.leading_eigenvalue * b[i] * b[i]).max(floor);
            assert_relative_eq!(
                est.specific_variances()[i],
                expected,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn pca_underestimates_concentration_with_high_probability() {
        // Homogeneous one-factor data at N=500, T=250: the concentration of
        // the PCA eigenvector along z falls below the true one in at least
        // 95% of trials.
        let n = 500;
        let t = 250;
        let config = CalibrationConfig::default();
        let sigma2 = config.factor_variance(0);
        let delta2 = 0.48f64 * 0.48 / 252.0;
        let trials = 200;
        let mut below = 0;
        for trial in 0..trials {
            let mut rng = stream_rng(77, &[trial]);
            let beta = build_market_beta(n, 0.9, &mut rng).unwrap();
            let model = FactorModelSpec::new(
                DMatrix::from_column_slice(n, 1, beta.as_slice()),
                DVector::from_element(1, sigma2),
                DVector::from_element(n, delta2),
            )
            .unwrap();
            let panel = simulate_returns(&model, t, &mut rng).unwrap();
            let est = pca_estimate(&panel).unwrap();
            let z = ReferenceVector::new(n).unwrap();
            let g_hat = z.concentration(est.exposures()).unwrap();
            let g_true = z.concentration(&beta).unwrap();
            if g_hat < g_true {
                below += 1;
            }
        }
        assert!(
            below as f64 >= 0.95 * trials as f64,
            "dispersion bias seen in only {below}/{trials} trials"
        );
    }

    #[test]
    fn sample_covariance_does_not_demean() {
        // constant nonzero returns: S = r r^T, nonzero even though the
        // demeaned covariance would vanish
        let n = 5;
        let t = 4;
        let data = DMatrix::from_element(n, t, 2.0);
        let panel = ReturnsPanel::from_matrix(data).unwrap();
        let stats = SampleCovariance::new(&panel).unwrap();
        assert_relative_eq!(stats.trace(), 4.0 * n as f64, max_relative = 1e-12);
    }
}
