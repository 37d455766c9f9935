//! Poisson-likelihood NMF via multiplicative KL-divergence updates, plus the
//! fixed-factor nonnegative linear model (NNLM) special case.
//!
//! The update pair is the normalized KL form:
//!
//! ```text
//! L[k,i]      *= sum_d lambda[d,k] * Y[d,i] / (lambda L)[d,i]  /  sum_d lambda[d,k]
//! lambda[d,k] *= sum_i L[k,i] * Y[d,i] / (lambda L)[d,i]       /  sum_i L[k,i]
//! ```
//!
//! Fits are pure functions of (input, config); restarts own independent RNG
//! streams derived from (seed, run index), so parallel and serial execution
//! produce bit-identical results.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis, Zip};
use rand::distributions::Uniform;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::CountMatrix;
use crate::error::{Error, Result};
use crate::rng;

/// Tie tolerance when picking the best restart: KL values closer than this
/// are considered equal and the lowest run index wins.
const RESTART_TIE_TOL: f64 = 1e-12;

/// Fit hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Independent random restarts; the lowest-KL fit is kept.
    pub n_runs: usize,
    /// Hard cap on update sweeps per run.
    pub max_iterations: usize,
    /// Stop when the relative KL change per sweep falls below this.
    pub rel_tolerance: f64,
    /// Additive floor inside denominators and log arguments; never used to
    /// clamp entries after updates.
    pub epsilon_floor: f64,
    /// Root of the run's RNG streams.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_runs: 5,
            max_iterations: 2000,
            rel_tolerance: 1e-6,
            epsilon_floor: 1e-10,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Same settings, different seed; used to derive per-stage configs.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidConfig("n_runs must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidConfig("rel_tolerance must be > 0".into()));
        }
        if !(self.epsilon_floor > 0.0) {
            return Err(Error::InvalidConfig("epsilon_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of a factorization: `lambda` (D x K) and `contributions` (K x N),
/// with the final objective and iteration bookkeeping of the winning run.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub lambda: Array2<f64>,
    pub contributions: Array2<f64>,
    pub kl_at_convergence: f64,
    pub n_iterations_used: usize,
    /// Internal objective after every completed sweep of the winning run.
    pub kl_trace: Vec<f64>,
}

impl FactorModel {
    pub fn n_factors(&self) -> usize {
        self.lambda.ncols()
    }

    /// The reconstruction `lambda * contributions`.
    pub fn product(&self) -> Array2<f64> {
        self.lambda.dot(&self.contributions)
    }
}

/// KL(y || yhat) = sum( y*log(y/yhat) - y + yhat ) with 0*log(0) = 0.
///
/// Errors where `yhat <= 0` at a cell with `y > 0`; cells with `y = 0`
/// contribute only `+yhat`.
pub fn kl_divergence(y: &CountMatrix, yhat: &Array2<f64>) -> Result<f64> {
    if y.values().dim() != yhat.dim() {
        return Err(Error::ShapeMismatch {
            context: "kl_divergence",
            expected: format!("{:?}", y.values().dim()),
            found: format!("{:?}", yhat.dim()),
        });
    }
    let mut total = 0.0;
    for ((r, c), &yv) in y.values().indexed_iter() {
        let yh = yhat[(r, c)];
        if yv > 0.0 {
            if yh <= 0.0 {
                return Err(Error::NonPositiveModelValue {
                    row: y.row_labels()[r].clone(),
                    col: y.col_labels()[c].clone(),
                    value: yh,
                });
            }
            total += yv * (yv / yh).ln() - yv + yh;
        } else {
            total += yh;
        }
    }
    Ok(total.max(0.0))
}

/// Objective used inside fits: the floor keeps the log argument finite while
/// the model still has zeros under positive data.
fn floored_kl(y: &Array2<f64>, yhat: &Array2<f64>, eps: f64) -> f64 {
    let mut acc = 0.0;
    Zip::from(y).and(yhat).for_each(|&yv, &yh| {
        acc += yh;
        if yv > 0.0 {
            acc += yv * (yv / (yh + eps)).ln() - yv;
        }
    });
    acc
}

struct RunFit {
    lambda: Array2<f64>,
    contributions: Array2<f64>,
    kl: f64,
    iterations: usize,
    trace: Vec<f64>,
}

/// One multiplicative-update run from a fresh random initialization.
/// With `fixed_lambda` set, only the contribution update is applied.
fn run_multiplicative(
    y: &Array2<f64>,
    k: usize,
    fixed_lambda: Option<&Array2<f64>>,
    cfg: &FitConfig,
    rng: &mut impl Rng,
) -> RunFit {
    let (d, n) = y.dim();
    let eps = cfg.epsilon_floor;
    let unif = Uniform::new(0.1, 1.1);

    // Contributions are drawn first so that a frozen-lambda run consumes the
    // same stream prefix as nnlm_fit.
    let mut l = Array2::from_shape_fn((k, n), |_| rng.sample(unif));
    let mut lambda = match fixed_lambda {
        Some(f) => f.to_owned(),
        None => Array2::from_shape_fn((d, k), |_| rng.sample(unif)),
    };

    let mut yhat = lambda.dot(&l);
    // Scale initial contributions so the initial product matches y's column sums.
    let y_colsums = y.sum_axis(Axis(0));
    let p_colsums = yhat.sum_axis(Axis(0));
    for i in 0..n {
        let s = if p_colsums[i] > 0.0 { y_colsums[i] / p_colsums[i] } else { 0.0 };
        l.column_mut(i).mapv_inplace(|v| v * s);
    }

    let mut ratio = Array2::<f64>::zeros((d, n));
    let mut numer_l = Array2::<f64>::zeros((k, n));
    let mut numer_lam = Array2::<f64>::zeros((d, k));

    let mut trace = Vec::new();
    let mut kl_prev: Option<f64> = None;
    let mut kl = f64::INFINITY;
    let mut iterations = cfg.max_iterations;

    for sweep in 0..cfg.max_iterations {
        // contributions update
        general_mat_mul(1.0, &lambda, &l, 0.0, &mut yhat);
        Zip::from(&mut ratio).and(y).and(&yhat).for_each(|r, &yv, &yh| *r = yv / (yh + eps));
        general_mat_mul(1.0, &lambda.t(), &ratio, 0.0, &mut numer_l);
        let lambda_colsums = lambda.sum_axis(Axis(0));
        for kk in 0..k {
            let denom = lambda_colsums[kk] + eps;
            Zip::from(l.row_mut(kk))
                .and(numer_l.row(kk))
                .for_each(|lv, &nv| *lv *= nv / denom);
        }

        // factor update
        if fixed_lambda.is_none() {
            general_mat_mul(1.0, &lambda, &l, 0.0, &mut yhat);
            Zip::from(&mut ratio).and(y).and(&yhat).for_each(|r, &yv, &yh| *r = yv / (yh + eps));
            general_mat_mul(1.0, &ratio, &l.t(), 0.0, &mut numer_lam);
            let l_rowsums = l.sum_axis(Axis(1));
            for kk in 0..k {
                let denom = l_rowsums[kk] + eps;
                Zip::from(lambda.column_mut(kk))
                    .and(numer_lam.column(kk))
                    .for_each(|lv, &nv| *lv *= nv / denom);
            }
        }

        general_mat_mul(1.0, &lambda, &l, 0.0, &mut yhat);
        kl = floored_kl(y, &yhat, eps);
        trace.push(kl);

        if let Some(prev) = kl_prev {
            let rel = (prev - kl).abs() / prev.abs().max(f64::MIN_POSITIVE);
            if rel < cfg.rel_tolerance {
                iterations = sweep + 1;
                break;
            }
        }
        kl_prev = Some(kl);
    }

    RunFit {
        lambda,
        contributions: l,
        kl,
        iterations,
        trace,
    }
}

fn validate_rank(k: usize, d: usize, n: usize) -> Result<()> {
    let max = d.min(n);
    if k == 0 || k > max {
        return Err(Error::RankOutOfRange { k, max });
    }
    Ok(())
}

/// Multi-restart NMF fit; the returned model is normalized so factor columns
/// sum to one. Non-convergence within `max_iterations` is not an error.
pub fn nmf_fit(y: &CountMatrix, k: usize, cfg: &FitConfig) -> Result<FactorModel> {
    cfg.validate()?;
    validate_rank(k, y.n_rows(), y.n_cols())?;
    y.check_no_zero_slices()?;

    let runs: Vec<RunFit> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng::stream(cfg.seed, "nmf-run", &[run as u64]);
            run_multiplicative(y.values(), k, None, cfg, &mut rng)
        })
        .collect();

    // Lowest KL wins; ties go to the lowest run index.
    let mut best = 0;
    for i in 1..runs.len() {
        if runs[i].kl < runs[best].kl - RESTART_TIE_TOL {
            best = i;
        }
    }
    let run = runs.into_iter().nth(best).unwrap();

    let model = FactorModel {
        kl_at_convergence: kl_divergence(y, &run.lambda.dot(&run.contributions))?,
        lambda: run.lambda,
        contributions: run.contributions,
        n_iterations_used: run.iterations,
        kl_trace: run.trace,
    };
    normalize(&model)
}

/// Contributions fit with `lambda_fixed` held constant (the NNLM).
///
/// The objective is convex in the contributions, so a single run suffices;
/// it is deterministic given the seed.
pub fn nnlm_fit(y: &CountMatrix, lambda_fixed: &Array2<f64>, cfg: &FitConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    if lambda_fixed.nrows() != y.n_rows() {
        return Err(Error::ShapeMismatch {
            context: "nnlm_fit",
            expected: format!("lambda with {} rows", y.n_rows()),
            found: format!("{} rows", lambda_fixed.nrows()),
        });
    }
    for (k, col) in lambda_fixed.columns().into_iter().enumerate() {
        if col.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroFactorColumn(k));
        }
    }
    let mut rng = rng::stream(cfg.seed, "nmf-run", &[0]);
    let run = run_multiplicative(y.values(), lambda_fixed.ncols(), Some(lambda_fixed), cfg, &mut rng);
    Ok(run.contributions)
}

/// Rescale so each factor column sums to one, scaling contribution rows by
/// the old column sums; the product is unchanged.
pub fn normalize(m: &FactorModel) -> Result<FactorModel> {
    let sums: Array1<f64> = m.lambda.sum_axis(Axis(0));
    for (k, &s) in sums.iter().enumerate() {
        if !(s > 0.0) {
            return Err(Error::ZeroFactorColumn(k));
        }
    }
    let mut lambda = m.lambda.clone();
    let mut contributions = m.contributions.clone();
    for (k, &s) in sums.iter().enumerate() {
        lambda.column_mut(k).mapv_inplace(|v| v / s);
        contributions.row_mut(k).mapv_inplace(|v| v * s);
    }
    Ok(FactorModel {
        lambda,
        contributions,
        kl_at_convergence: m.kl_at_convergence,
        n_iterations_used: m.n_iterations_used,
        kl_trace: m.kl_trace.clone(),
    })
}
