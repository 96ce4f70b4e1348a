use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Drift {
    Fixed(f64),
    /// Quantile of the windowed quadratic forms on the training stream.
    Quantile(f64),
}

impl Default for Drift {
    fn default() -> Self {
        Drift::Quantile(0.9)
    }
}

/// In-control mean and regularized inverse covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct HotellingModel {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    window: usize,
    drift: f64,
}

impl HotellingModel {
    /// Adds `lambda I` with `lambda = 1e-6 trace / p` before inverting.
    pub fn from_parts(mean: Vec<f64>, covariance: DMatrix<f64>, window: usize, drift: f64) -> Result<Self> {
        let p = mean.len();
        if p == 0 {
            return Err(Error::EmptyInput("mean vector"));
        }
        if covariance.shape() != (p, p) {
            return Err(Error::DimensionMismatch { expected: p, found: covariance.nrows() });
        }
        if !(drift >= 0.0) || !drift.is_finite() {
            return Err(Error::invalid(format!("drift must be finite and nonnegative, got {drift}")));
        }
        let lambda = 1e-6 * covariance.trace() / p as f64;
        let reg = &covariance + DMatrix::identity(p, p) * lambda;
        let chol = reg.cholesky().ok_or(Error::Singular("covariance"))?;
        let precision = chol.inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        Ok(Self { mean: DVector::from_vec(mean), precision, window, drift })
    }

    /// Mean and covariance from training vectors; with `Drift::Quantile` the
    /// drift is that quantile of the windowed quadratic forms over the
    /// training sequence taken in order.
    pub fn fit(training: &[Vec<f64>], window: usize, drift: Drift) -> Result<Self> {
        let n = training.len();
        if n < 2 {
            return Err(Error::EmptyInput("training vectors (need at least 2)"));
        }
        let p = training[0].len();
        let x = stack(training, p)?;
        let mean: DVector<f64> = x.row_mean().transpose();
        let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / (n - 1) as f64;
        let mut model = Self::from_parts(mean.as_slice().to_vec(), cov, window, 0.0)?;
        model.drift = match drift {
            Drift::Fixed(d) => {
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::invalid(format!("drift must be finite and nonnegative, got {d}")));
                }
                d
            }
            Drift::Quantile(q) => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::invalid(format!("drift quantile must lie in [0, 1], got {q}")));
                }
                let mut forms = model.windowed_forms(training)?;
                forms.sort_by(f64::total_cmp);
                let pos = q * (forms.len() - 1) as f64;
                let (i, frac) = (pos.floor() as usize, pos.fract());
                if i + 1 < forms.len() { forms[i] + frac * (forms[i + 1] - forms[i]) } else { forms[i] }
            }
        };
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `(x - mean)' precision (x - mean)`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        d.dot(&(&self.precision * &d))
    }

    /// Quadratic form of the mean of `x_{t-w}, ..., x_t` (fewer frames near the start).
    pub fn windowed_forms(&self, stream: &[Vec<f64>]) -> Result<Vec<f64>> {
        let p = self.dim();
        let mut sum = vec![0.0; p];
        let mut out = Vec::with_capacity(stream.len());
        for (t, x) in stream.iter().enumerate() {
            if x.len() != p {
                return Err(Error::DimensionMismatch { expected: p, found: x.len() });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("stream vector"));
            }
            sum.iter_mut().zip(x).for_each(|(s, v)| *s += v);
            if t > self.window {
                sum.iter_mut().zip(&stream[t - self.window - 1]).for_each(|(s, v)| *s -= v);
            }
            let count = (t.min(self.window) + 1) as f64;
            // Rebuild the window sum exactly every few hundred steps to stop
            // rounding drift from the running update.
            if t % 256 == 255 {
                sum.iter_mut().for_each(|s| *s = 0.0);
                for y in &stream[t.saturating_sub(self.window)..=t] {
                    sum.iter_mut().zip(y).for_each(|(s, v)| *s += v);
                }
            }
            let avg: Vec<f64> = sum.iter().map(|s| s / count).collect();
            out.push(self.quadratic_form(&avg));
        }
        Ok(out)
    }
}

fn stack(rows: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::EmptyInput("training vector"));
    }
    for r in rows {
        if r.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training vector"));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

/// CUSUM of the windowed quadratic forms `Q_t`: `S_t = max(S_{t-1}, 0) + Q_t - d`
/// with `S_{-1} = 0`. The recursion only reads the positive part, and that
/// positive part is what is returned.
pub fn hotelling_cusum(stream: &[Vec<f64>], model: &HotellingModel) -> Result<Vec<f64>> {
    let forms = model.windowed_forms(stream)?;
    let mut s = 0.0f64;
    Ok(forms
        .into_iter()
        .map(|q| {
            s = (s + q - model.drift).max(0.0);
            s
        })
        .collect())
}
