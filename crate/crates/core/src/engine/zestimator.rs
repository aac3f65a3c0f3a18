use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::balanced::{bootstrap_multivariate, MultivariateResult};
use crate::error::{Error, Result};
use crate::model::{BootstrapConfig, PanelArray};

/// Moment function `g(y, theta)`: maps the outcome vector of one cell and a
/// parameter vector to `m` moment values.
pub type MomentFn<'a> = dyn Fn(&[f64], &[f64]) -> Vec<f64> + 'a;

/// A Z-estimation problem `mean_it g(Y_it, theta) = 0` solved at `theta_hat`.
pub struct ZProblem<'a> {
    pub moments: &'a MomentFn<'a>,
    pub theta_hat: Vec<f64>,
    /// `m x p` derivative of the mean moment at `theta_hat`; central finite
    /// differences when absent.
    pub jacobian: Option<DMatrix<f64>>,
    /// `p x m` weight matrix; identity when absent and `m = p`, otherwise the
    /// transposed jacobian.
    pub weight: Option<DMatrix<f64>>,
    /// Largest accepted condition number of `A G`.
    pub max_condition: f64,
}

impl<'a> ZProblem<'a> {
    pub fn new(moments: &'a MomentFn<'a>, theta_hat: Vec<f64>) -> Self {
        ZProblem { moments, theta_hat, jacobian: None, weight: None, max_condition: 1e12 }
    }

    pub fn with_jacobian(mut self, jacobian: DMatrix<f64>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn with_weight(mut self, weight: DMatrix<f64>) -> Self {
        self.weight = Some(weight);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ZEstimatorResult {
    pub theta_hat: Vec<f64>,
    /// `deviations[b][j]` is `theta*_j - theta_hat_j` in replicate `b`.
    pub deviations: Vec<Vec<f64>>,
    /// Row-major `m x p` jacobian used.
    pub jacobian: Vec<Vec<f64>>,
    /// Bootstrap of the moment means.
    pub moments: MultivariateResult,
}

impl ZEstimatorResult {
    /// Replicate draws of parameter `j`.
    pub fn draws(&self, j: usize) -> Vec<f64> {
        self.deviations.iter().map(|d| self.theta_hat[j] + d[j]).collect()
    }

    /// Bootstrap standard deviation of parameter `j`.
    pub fn std_dev(&self, j: usize) -> f64 {
        let b = self.deviations.len() as f64;
        let m = self.deviations.iter().map(|d| d[j]).sum::<f64>() / b;
        (self.deviations.iter().map(|d| (d[j] - m).powi(2)).sum::<f64>() / (b - 1.0)).sqrt()
    }
}

fn evaluate(problem: &ZProblem, sample: &PanelArray, theta: &[f64], m_expected: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(sample.n_cells());
    let mut y = vec![0.0; sample.n_vars()];
    for i in 0..sample.n_rows() {
        for t in 0..sample.n_cols() {
            for (m, v) in y.iter_mut().enumerate() {
                *v = sample.get_var(i, t, m);
            }
            let g = (problem.moments)(&y, theta);
            let want = m_expected.unwrap_or_else(|| out.first().map_or(g.len(), |f: &Vec<f64>| f.len()));
            if g.is_empty() || g.len() != want {
                return Err(Error::MomentEvaluationFailure(format!(
                    "cell ({i}, {t}) returned {} moments, expected {want}",
                    g.len()
                )));
            }
            if let Some(k) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::MomentEvaluationFailure(format!("moment {k} is not finite at cell ({i}, {t})")));
            }
            out.push(g);
        }
    }
    Ok(out)
}

fn mean_moments(g: &[Vec<f64>]) -> DVector<f64> {
    let m = g[0].len();
    DVector::from_iterator(m, (0..m).map(|k| g.iter().map(|row| row[k]).sum::<f64>() / g.len() as f64))
}

fn finite_difference_jacobian(problem: &ZProblem, sample: &PanelArray, m: usize) -> Result<DMatrix<f64>> {
    let p = problem.theta_hat.len();
    let mut jac = DMatrix::zeros(m, p);
    for j in 0..p {
        let h = 1e-6 * problem.theta_hat[j].abs().max(1.0);
        let mut up = problem.theta_hat.clone();
        let mut down = problem.theta_hat.clone();
        up[j] += h;
        down[j] -= h;
        let gu = mean_moments(&evaluate(problem, sample, &up, Some(m))?);
        let gd = mean_moments(&evaluate(problem, sample, &down, Some(m))?);
        jac.set_column(j, &((gu - gd) / (up[j] - down[j])));
    }
    Ok(jac)
}

/// Bootstrap of a Z-estimator by resampling the `N x T x m` array of moments
/// at `theta_hat` and mapping each bootstrap mean moment through the
/// linearization `theta* - theta_hat = -(A G)^{-1} A (S* - S)`.
pub fn bootstrap_zestimator(sample: &PanelArray, problem: &ZProblem, cfg: &BootstrapConfig) -> Result<ZEstimatorResult> {
    let p = problem.theta_hat.len();
    if p == 0 {
        return Err(Error::InvalidConfig("empty parameter vector".into()));
    }
    let g = evaluate(problem, sample, &problem.theta_hat, None)?;
    let m = g[0].len();
    let jac = match &problem.jacobian {
        Some(j) => j.clone(),
        None => finite_difference_jacobian(problem, sample, m)?,
    };
    if jac.shape() != (m, p) {
        return Err(Error::InvalidConfig(format!("jacobian is {:?}, expected ({m}, {p})", jac.shape())));
    }
    let weight = match &problem.weight {
        Some(a) => a.clone(),
        None if m == p => DMatrix::identity(p, p),
        None => jac.transpose(),
    };
    if weight.shape() != (p, m) {
        return Err(Error::InvalidConfig(format!("weight is {:?}, expected ({p}, {m})", weight.shape())));
    }
    let ag = &weight * &jac;
    let sv = ag.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 0.0) || smax / smin > problem.max_condition {
        return Err(Error::SingularJacobian(format!(
            "condition number {} exceeds {}",
            smax / smin,
            problem.max_condition
        )));
    }
    let inv = ag.try_inverse().ok_or_else(|| Error::SingularJacobian("A G is not invertible".into()))?;
    let gain = inv * &weight;

    let mut values = Vec::with_capacity(m * g.len());
    for k in 0..m {
        values.extend(g.iter().map(|row| row[k]));
    }
    let moment_panel = PanelArray::multivariate(sample.n_rows(), sample.n_cols(), m, values)
        .map_err(|e| Error::MomentEvaluationFailure(e.to_string()))?;
    let boot = bootstrap_multivariate(&moment_panel, cfg)?;
    let center: Vec<f64> = boot.components.iter().map(|c| c.mean).collect();
    let deviations = (0..cfg.replicates)
        .map(|b| {
            let diff = DVector::from_iterator(m, (0..m).map(|k| boot.components[k].replicate_means[b] - center[k]));
            let step = &gain * diff;
            step.iter().map(|x| -x).collect()
        })
        .collect();
    Ok(ZEstimatorResult {
        theta_hat: problem.theta_hat.clone(),
        deviations,
        jacobian: (0..m).map(|r| jac.row(r).iter().copied().collect()).collect(),
        moments: boot,
    })
}
