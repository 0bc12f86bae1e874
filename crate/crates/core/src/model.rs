//! Core domain types: factor models, covariance representations and the
//! sphere geometry primitives shared by estimation and correction code.
//!
//! Exposure vectors are normalized to unit Euclidean norm throughout, so the
//! inner product of two exposure vectors is the cosine of the angle between
//! them ("concentration"). The reference vector z = 1_N / sqrt(N) is the
//! unit vector with equal entries and is the frame in which estimation bias
//! is measured and corrected.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for unit-norm checks on exposure vectors.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// Relative symmetry tolerance for dense covariance input.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn check_unit(v: &DVector<f64>) -> Result<()> {
    let deviation = (v.norm() - 1.0).abs();
    if deviation > UNIT_NORM_TOL {
        return Err(Error::NonUnitVector {
            deviation,
            tolerance: UNIT_NORM_TOL,
        });
    }
    Ok(())
}

fn check_positive(values: &DVector<f64>) -> Result<()> {
    for &v in values.iter() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveVariance { value: v });
        }
    }
    Ok(())
}

/// The dispersionless reference direction z = 1_N / sqrt(N).
///
/// Never materialized in hot paths: inner products against z reduce to
/// `sum(x) / sqrt(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceVector {
    n_assets: usize,
}

impl ReferenceVector {
    pub fn new(n_assets: usize) -> Result<Self> {
        if n_assets == 0 {
            return Err(Error::InvalidConfig("reference vector needs n >= 1".into()));
        }
        Ok(Self { n_assets })
    }

    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    /// The common entry 1 / sqrt(N).
    pub fn entry(&self) -> f64 {
        1.0 / (self.n_assets as f64).sqrt()
    }

    /// Inner product x^T z without materializing z.
    pub fn dot(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.n_assets {
            return Err(Error::DimensionMismatch {
                expected: self.n_assets,
                actual: x.len(),
            });
        }
        Ok(x.sum() * self.entry())
    }

    /// Concentration gamma_{x,z} = x^T z for unit x.
    pub fn concentration(&self, x: &DVector<f64>) -> Result<f64> {
        check_unit(x)?;
        Ok(self.dot(x)?.clamp(-1.0, 1.0))
    }

    /// Materialize the vector (test oracles and small-N paths only).
    pub fn materialize(&self) -> DVector<f64> {
        DVector::from_element(self.n_assets, self.entry())
    }
}

/// Cosine of the angle between two unit vectors.
pub fn concentration(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_unit(x)?;
    check_unit(y)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(x.dot(y).clamp(-1.0, 1.0))
}

/// Concentration under the inverse-variance inner product,
/// `x^T W^{-1} y / sqrt((x^T W^{-1} x)(y^T W^{-1} y))` with `W = diag(weights)`.
///
/// The weights are specific variances; weighting by their inverse is the
/// whitening that makes heterogeneous specific risk isotropic. Inputs need
/// not be unit norm (the form normalizes).
pub fn weighted_concentration(
    x: &DVector<f64>,
    y: &DVector<f64>,
    weights: &DVector<f64>,
) -> Result<f64> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: if x.len() != y.len() { y.len() } else { weights.len() },
        });
    }
    check_positive(weights)?;
    let mut xy = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for i in 0..x.len() {
        let w = 1.0 / weights[i];
        xy += x[i] * y[i] * w;
        xx += x[i] * x[i] * w;
        yy += y[i] * y[i] * w;
    }
    if xx <= 0.0 || yy <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "weighted norm of an input vector is zero".into(),
        ));
    }
    Ok((xy / (xx * yy).sqrt()).clamp(-1.0, 1.0))
}

/// Flip the sign of a unit vector so that its component along z is
/// nonnegative. An exact tie (x^T z = 0) keeps the input sign.
pub fn orient(x: DVector<f64>, z: &ReferenceVector) -> Result<DVector<f64>> {
    check_unit(&x)?;
    if z.dot(&x)? < 0.0 {
        Ok(-x)
    } else {
        Ok(x)
    }
}

/// Ground-truth return generator: K factors with unit-norm exposure columns,
/// per-period factor variances and strictly positive specific variances.
#[derive(Debug, Clone)]
pub struct FactorModelSpec {
    exposures: DMatrix<f64>,
    factor_variances: DVector<f64>,
    specific_variances: DVector<f64>,
}

impl FactorModelSpec {
    pub fn new(
        exposures: DMatrix<f64>,
        factor_variances: DVector<f64>,
        specific_variances: DVector<f64>,
    ) -> Result<Self> {
        let (n, k) = exposures.shape();
        if n == 0 {
            return Err(Error::InvalidConfig("model needs at least one asset".into()));
        }
        if factor_variances.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: factor_variances.len(),
            });
        }
        if specific_variances.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: specific_variances.len(),
            });
        }
        for col in 0..k {
            let deviation = (exposures.column(col).norm() - 1.0).abs();
            if deviation > 1e-12 {
                return Err(Error::NonUnitVector {
                    deviation,
                    tolerance: 1e-12,
                });
            }
        }
        for &v in factor_variances.iter() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveVariance { value: v });
            }
        }
        check_positive(&specific_variances)?;
        Ok(Self {
            exposures,
            factor_variances,
            specific_variances,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.exposures.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.exposures.ncols()
    }

    pub fn exposures(&self) -> &DMatrix<f64> {
        &self.exposures
    }

    /// Exposures to the dominant (first) factor.
    pub fn market_exposures(&self) -> DVector<f64> {
        self.exposures.column(0).into_owned()
    }

    /// Variance of the dominant factor, per period.
    pub fn market_variance(&self) -> f64 {
        self.factor_variances[0]
    }

    pub fn factor_variances(&self) -> &DVector<f64> {
        &self.factor_variances
    }

    pub fn specific_variances(&self) -> &DVector<f64> {
        &self.specific_variances
    }

    /// Assemble the implied covariance in structured form.
    pub fn covariance(&self) -> CovarianceModel {
        CovarianceModel::Structured {
            exposures: self.exposures.clone(),
            factor_variances: self.factor_variances.clone(),
            specific_variances: self.specific_variances.clone(),
        }
    }
}

/// A fitted one-factor model: factor variance, unit exposure vector oriented
/// toward z, and floored specific variances.
#[derive(Debug, Clone)]
pub struct EstimatedFactorModel {
    factor_variance: f64,
    exposures: DVector<f64>,
    specific_variances: DVector<f64>,
}

impl EstimatedFactorModel {
    pub fn new(
        factor_variance: f64,
        exposures: DVector<f64>,
        specific_variances: DVector<f64>,
    ) -> Result<Self> {
        if !(factor_variance >= 0.0) || !factor_variance.is_finite() {
            return Err(Error::NonPositiveVariance {
                value: factor_variance,
            });
        }
        let deviation = (exposures.norm() - 1.0).abs();
        if deviation > 1e-12 {
            return Err(Error::NonUnitVector {
                deviation,
                tolerance: 1e-12,
            });
        }
        if specific_variances.len() != exposures.len() {
            return Err(Error::DimensionMismatch {
                expected: exposures.len(),
                actual: specific_variances.len(),
            });
        }
        let z = ReferenceVector::new(exposures.len())?;
        if z.dot(&exposures)? < 0.0 {
            return Err(Error::DegenerateGeometry(
                "estimated exposures must be oriented toward z".into(),
            ));
        }
        check_positive(&specific_variances)?;
        Ok(Self {
            factor_variance,
            exposures,
            specific_variances,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.exposures.len()
    }

    pub fn factor_variance(&self) -> f64 {
        self.factor_variance
    }

    pub fn exposures(&self) -> &DVector<f64> {
        &self.exposures
    }

    pub fn specific_variances(&self) -> &DVector<f64> {
        &self.specific_variances
    }

    /// Assemble sigma^2 b b^T + Delta in structured form.
    pub fn covariance(&self) -> CovarianceModel {
        CovarianceModel::Structured {
            exposures: DMatrix::from_column_slice(
                self.exposures.len(),
                1,
                self.exposures.as_slice(),
            ),
            factor_variances: DVector::from_element(1, self.factor_variance),
            specific_variances: self.specific_variances.clone(),
        }
    }
}

/// A covariance matrix, either materialized or in factor-structured form
/// `sum_k sigma_k^2 b_k b_k^T + Delta`.
///
/// The structured form supports quadratic forms in O(N K) and is used
/// everywhere; dense matrices appear only in small-N test oracles.
#[derive(Debug, Clone)]
pub enum CovarianceModel {
    Dense(DMatrix<f64>),
    Structured {
        exposures: DMatrix<f64>,
        factor_variances: DVector<f64>,
        specific_variances: DVector<f64>,
    },
}

impl CovarianceModel {
    /// Wrap a dense symmetric matrix, rejecting asymmetric input.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let mut max_asymmetry = 0.0f64;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                max_asymmetry = max_asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs() / scale);
            }
        }
        if max_asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        Ok(CovarianceModel::Dense(matrix))
    }

    /// Structured one-factor covariance from raw parts.
    pub fn structured_one_factor(
        factor_variance: f64,
        exposures: DVector<f64>,
        specific_variances: DVector<f64>,
    ) -> Result<Self> {
        if !(factor_variance >= 0.0) {
            return Err(Error::NonPositiveVariance {
                value: factor_variance,
            });
        }
        if exposures.len() != specific_variances.len() {
            return Err(Error::DimensionMismatch {
                expected: exposures.len(),
                actual: specific_variances.len(),
            });
        }
        check_positive(&specific_variances)?;
        let n = exposures.len();
        Ok(CovarianceModel::Structured {
            exposures: DMatrix::from_column_slice(n, 1, exposures.as_slice()),
            factor_variances: DVector::from_element(1, factor_variance),
            specific_variances,
        })
    }

    pub fn n_assets(&self) -> usize {
        match self {
            CovarianceModel::Dense(m) => m.nrows(),
            CovarianceModel::Structured { exposures, .. } => exposures.nrows(),
        }
    }

    /// Quadratic form w^T Sigma w.
    ///
    /// Structured path expands to `sum_k sigma_k^2 (b_k^T w)^2 + sum_n
    /// delta_n^2 w_n^2` and never touches an N x N matrix.
    pub fn quadratic_form(&self, w: &DVector<f64>) -> Result<f64> {
        if w.len() != self.n_assets() {
            return Err(Error::DimensionMismatch {
                expected: self.n_assets(),
                actual: w.len(),
            });
        }
        match self {
            CovarianceModel::Dense(m) => Ok(w.dot(&(m * w))),
            CovarianceModel::Structured {
                exposures,
                factor_variances,
                specific_variances,
            } => {
                let mut total = 0.0;
                for k in 0..exposures.ncols() {
                    let proj = exposures.column(k).dot(w);
                    total += factor_variances[k] * proj * proj;
                }
                for n in 0..w.len() {
                    total += specific_variances[n] * w[n] * w[n];
                }
                Ok(total)
            }
        }
    }

    /// Matrix-vector product Sigma x.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.n_assets() {
            return Err(Error::DimensionMismatch {
                expected: self.n_assets(),
                actual: x.len(),
            });
        }
        match self {
            CovarianceModel::Dense(m) => Ok(m * x),
            CovarianceModel::Structured {
                exposures,
                factor_variances,
                specific_variances,
            } => {
                let mut out = DVector::from_fn(x.len(), |i, _| specific_variances[i] * x[i]);
                for k in 0..exposures.ncols() {
                    let col = exposures.column(k);
                    let proj = factor_variances[k] * col.dot(x);
                    out.axpy(proj, &col.into_owned(), 1.0);
                }
                Ok(out)
            }
        }
    }

    /// Materialize the full matrix (test oracles and small N only).
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            CovarianceModel::Dense(m) => m.clone(),
            CovarianceModel::Structured {
                exposures,
                factor_variances,
                specific_variances,
            } => {
                let n = exposures.nrows();
                let mut out = DMatrix::from_diagonal(specific_variances);
                for k in 0..exposures.ncols() {
                    let col = exposures.column(k);
                    out.syger(factor_variances[k], &col, &col, 1.0);
                }
                // syger fills one triangle; symmetrize explicitly
                let _ = n;
                for i in 0..out.nrows() {
                    for j in 0..i {
                        let v = out[(i, j)];
                        out[(j, i)] = v;
                    }
                }
                out
            }
        }
    }
}

/// A panel of excess returns, one column per observation (N x T).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    data: DMatrix<f64>,
}

impl ReturnsPanel {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::DegeneratePanel("empty panel".into()));
        }
        Ok(Self { data })
    }

    pub fn n_assets(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}
