//! Synthetic cohort generation and learning-induced interference metrics.
//!
//! Datasets fix both latent potential outcomes and both potential observed
//! matrices once; interference estimation then resamples only the treatment
//! program, so realizations differ through treatment alone.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;

use crate::data::{CountMatrix, TreatmentVector};
use crate::error::{Error, Result};
use crate::estimators::{learned_observed_outcomes, Algorithm, PotentialOutcomes};
use crate::factorization::FitConfig;
use crate::rng;

/// Default treatment-probability pair for interference studies.
pub const DEFAULT_PI: f64 = 0.2;
pub const DEFAULT_PI_PRIME: f64 = 0.8;

/// Ground-truth generating process for one simulated cohort.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// D x K true factor matrix with simplex columns.
    pub lambda_true: Array2<f64>,
    /// Empirical sampling distribution p(L): one K-vector per row.
    pub sample_pool: Array2<f64>,
    /// True treatment effect per factor.
    pub psi_true: Array1<f64>,
    /// Per-factor noise SDs under control.
    pub sigma0: Array1<f64>,
    /// Per-factor noise SDs under treatment.
    pub sigma1: Array1<f64>,
    /// Treatment probability.
    pub pi: f64,
    /// Cohort size.
    pub n: usize,
    pub seed: u64,
    /// Optional variable labels for generated matrices.
    pub row_labels: Option<Vec<String>>,
}

impl SimConfig {
    pub fn k(&self) -> usize {
        self.lambda_true.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.sample_pool.nrows() == 0 {
            return Err(Error::EmptyPool);
        }
        if self.sample_pool.ncols() != k
            || self.psi_true.len() != k
            || self.sigma0.len() != k
            || self.sigma1.len() != k
        {
            return Err(Error::ShapeMismatch {
                context: "sim config",
                expected: format!("K = {k} everywhere"),
                found: format!(
                    "pool width {}, psi {}, sigma0 {}, sigma1 {}",
                    self.sample_pool.ncols(),
                    self.psi_true.len(),
                    self.sigma0.len(),
                    self.sigma1.len()
                ),
            });
        }
        if !(self.pi > 0.0 && self.pi < 1.0) {
            return Err(Error::InvalidProbability {
                name: "pi",
                value: self.pi,
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("cohort size n must be >= 1".into()));
        }
        if self.sigma0.iter().chain(self.sigma1.iter()).any(|&s| s < 0.0) {
            return Err(Error::InvalidConfig("noise SDs must be >= 0".into()));
        }
        for (j, col) in self.lambda_true.columns().into_iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > 1e-6 || col.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "lambda_true column {j} is not a simplex column (sum {s})"
                )));
            }
        }
        Ok(())
    }
}

/// One simulated cohort: true potential outcomes, fixed potential observed
/// matrices, realized treatment, and the observed data.
#[derive(Debug, Clone)]
pub struct SimDataset {
    pub l0: Array2<f64>,
    pub l1: Array2<f64>,
    pub t: TreatmentVector,
    pub y: CountMatrix,
    /// Potential observed data under all-control, drawn once.
    pub y0: Array2<f64>,
    /// Potential observed data under all-treatment, drawn once.
    pub y1: Array2<f64>,
}

impl SimDataset {
    pub fn truth(&self) -> PotentialOutcomes {
        PotentialOutcomes {
            l0: self.l0.clone(),
            l1: self.l1.clone(),
        }
    }

    /// Observed matrix under an arbitrary treatment program, assembled from
    /// the fixed potential draws.
    pub fn observed_under(&self, t: &TreatmentVector) -> Result<CountMatrix> {
        let mut v = self.y0.clone();
        for i in t.treated_indices() {
            v.column_mut(i).assign(&self.y1.column(i));
        }
        self.y.with_values(v)
    }
}

fn draw_poisson(rate: f64, rng: &mut impl Rng) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng)
}

/// Generate one cohort from the config's seed (bit-reproducible).
pub fn generate_dataset(cfg: &SimConfig) -> Result<SimDataset> {
    cfg.validate()?;
    let k = cfg.k();
    let d = cfg.lambda_true.nrows();
    let n = cfg.n;
    let mut r = rng::stream(cfg.seed, "sim-dataset", &[]);
    let std_normal = Normal::new(0.0, 1.0).unwrap();

    let mut l0 = Array2::<f64>::zeros((k, n));
    let mut l1 = Array2::<f64>::zeros((k, n));
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let row = r.gen_range(0..cfg.sample_pool.nrows());
        let base = cfg.sample_pool.row(row);
        for f in 0..k {
            let eps0: f64 = std_normal.sample(&mut r) * cfg.sigma0[f];
            l0[(f, i)] = (base[f] + eps0).max(0.0);
        }
        for f in 0..k {
            let eps1: f64 = std_normal.sample(&mut r) * cfg.sigma1[f];
            l1[(f, i)] = (base[f] + cfg.psi_true[f] + eps1).max(0.0);
        }
        t.push(u8::from(r.gen_bool(cfg.pi)));
    }
    let t = TreatmentVector::new(t)?;

    let rate0 = cfg.lambda_true.dot(&l0);
    let rate1 = cfg.lambda_true.dot(&l1);
    let mut y0 = Array2::<f64>::zeros((d, n));
    let mut y1 = Array2::<f64>::zeros((d, n));
    for i in 0..n {
        for row in 0..d {
            y0[(row, i)] = draw_poisson(rate0[(row, i)], &mut r);
        }
        for row in 0..d {
            y1[(row, i)] = draw_poisson(rate1[(row, i)], &mut r);
        }
    }

    let mut observed = y0.clone();
    for i in t.treated_indices() {
        observed.column_mut(i).assign(&y1.column(i));
    }
    let row_labels = cfg
        .row_labels
        .clone()
        .unwrap_or_else(|| (0..d).map(|i| format!("v{i}")).collect());
    let col_labels = (0..n).map(|i| format!("s{i}")).collect();
    let y = CountMatrix::new(observed, row_labels, col_labels)?;

    Ok(SimDataset { l0, l1, t, y, y0, y1 })
}

/// Per-individual average learned latent outcomes under an assignment
/// mechanism, estimated over `r_realizations` resampled treatment programs.
#[derive(Debug, Clone)]
pub struct IalloEstimate {
    /// K x N average learned outcome at arm 0.
    pub untreated: Array2<f64>,
    /// K x N average learned outcome at arm 1.
    pub treated: Array2<f64>,
    /// Individual runs (base or flip) skipped because the algorithm could
    /// not handle the realization, e.g. an all-control draw for an
    /// imputation-based algorithm.
    pub n_skipped_runs: usize,
}

/// Estimate IALLOs for every subject by resampling the treatment program R
/// times. Potential outcomes and potential observed data stay fixed; only
/// treatment changes. For each realization the algorithm is run once as-is
/// and once per subject with that subject's assignment flipped; the flipped
/// run supplies the subject's outcome at the opposite arm.
///
/// Realization streams do not depend on `pi`: realization r draws one
/// uniform per subject and thresholds it at `pi`, and base/flip runs within
/// a realization share one fit seed. Estimates under two mechanisms are
/// therefore coupled through common random numbers, so their difference
/// isolates the mechanism change instead of initialization noise; each
/// marginal estimate is unaffected.
#[allow(clippy::too_many_arguments)]
pub fn estimate_iallo(
    dataset: &SimDataset,
    algorithm: Algorithm,
    pi: f64,
    r_realizations: usize,
    k: usize,
    fit_cfg: &FitConfig,
    split_p: f64,
) -> Result<IalloEstimate> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidProbability { name: "pi", value: pi });
    }
    if r_realizations == 0 {
        return Err(Error::InvalidConfig("R must be >= 1".into()));
    }
    let n = dataset.t.len();
    let k_dim = if algorithm.needs_truth() { dataset.l0.nrows() } else { k };
    let truth = dataset.truth();

    let mut acc = [Array2::<f64>::zeros((k_dim, n)), Array2::<f64>::zeros((k_dim, n))];
    let mut counts = [vec![0usize; n], vec![0usize; n]];
    let mut n_skipped = 0usize;

    for real in 0..r_realizations {
        let mut t_rng = rng::stream(fit_cfg.seed, "realization", &[real as u64]);
        let t_r = TreatmentVector::new(
            (0..n).map(|_| u8::from(t_rng.gen::<f64>() < pi)).collect(),
        )?;
        let y_r = dataset.observed_under(&t_r)?;
        let fit = fit_cfg.reseeded(rng::derive_seed(
            fit_cfg.seed,
            "realization-fit",
            &[real as u64],
        ));

        // Shared base run; Random Split instead reruns per subject so the
        // subject is always in the held-out half.
        let shared_base = if algorithm == Algorithm::RandomSplit {
            None
        } else {
            match learned_observed_outcomes(algorithm, &y_r, &t_r, k, &fit, split_p, Some(&truth), None)
            {
                Ok(out) => Some(out),
                Err(_) => {
                    n_skipped += 1;
                    continue;
                }
            }
        };

        let per_subject: Vec<(Option<Array1<f64>>, Option<Array1<f64>>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let base = match &shared_base {
                    Some(out) => out.observed_arm_for(i),
                    None => learned_observed_outcomes(
                        algorithm,
                        &y_r,
                        &t_r,
                        k,
                        &fit,
                        split_p,
                        Some(&truth),
                        Some(i),
                    )
                    .ok()
                    .and_then(|out| out.observed_arm_for(i)),
                };
                let t_flip = t_r.flipped(i);
                let flip = dataset
                    .observed_under(&t_flip)
                    .ok()
                    .and_then(|y_flip| {
                        learned_observed_outcomes(
                            algorithm,
                            &y_flip,
                            &t_flip,
                            k,
                            &fit,
                            split_p,
                            Some(&truth),
                            Some(i),
                        )
                        .ok()
                    })
                    .and_then(|out| out.observed_arm_for(i));
                (base, flip)
            })
            .collect();

        for (i, (base, flip)) in per_subject.into_iter().enumerate() {
            let arm_base = usize::from(t_r.is_treated(i));
            match base {
                Some(v) => {
                    acc[arm_base].column_mut(i).scaled_add(1.0, &v);
                    counts[arm_base][i] += 1;
                }
                None => n_skipped += 1,
            }
            match flip {
                Some(v) => {
                    acc[1 - arm_base].column_mut(i).scaled_add(1.0, &v);
                    counts[1 - arm_base][i] += 1;
                }
                None => n_skipped += 1,
            }
        }
    }

    let finish = |mut m: Array2<f64>, cnt: &[usize]| {
        for (i, &c) in cnt.iter().enumerate() {
            let scale = if c > 0 { 1.0 / c as f64 } else { f64::NAN };
            m.column_mut(i).mapv_inplace(|v| v * scale);
        }
        m
    };
    let [acc0, acc1] = acc;
    Ok(IalloEstimate {
        untreated: finish(acc0, &counts[0]),
        treated: finish(acc1, &counts[1]),
        n_skipped_runs: n_skipped,
    })
}

/// Per-individual learning-induced indirect effects: difference of untreated
/// IALLO tables under two assignment mechanisms (K x N).
pub fn li_iaie(iallo_pi: &Array2<f64>, iallo_pi_prime: &Array2<f64>) -> Result<Array2<f64>> {
    if iallo_pi.dim() != iallo_pi_prime.dim() {
        return Err(Error::ShapeMismatch {
            context: "li_iaie",
            expected: format!("{:?}", iallo_pi.dim()),
            found: format!("{:?}", iallo_pi_prime.dim()),
        });
    }
    Ok(iallo_pi - iallo_pi_prime)
}

/// Population average of the per-individual indirect effects (K-vector).
pub fn li_paie(iallo_pi: &Array2<f64>, iallo_pi_prime: &Array2<f64>) -> Result<Array1<f64>> {
    let diff = li_iaie(iallo_pi, iallo_pi_prime)?;
    diff.mean_axis(Axis(1)).ok_or(Error::EmptyMatrix)
}

/// Per-individual total absolute indirect effect rescaled by twice the
/// subject's observed total, since a reattributed count is seen once by the
/// factor it leaves and once by the factor it joins.
pub fn scaled_total_abs_lipaie(li_iaie: &Array2<f64>, y_totals: &[f64]) -> Result<Vec<f64>> {
    if li_iaie.ncols() != y_totals.len() {
        return Err(Error::ShapeMismatch {
            context: "scaled_total_abs_lipaie",
            expected: format!("{} totals", li_iaie.ncols()),
            found: format!("{}", y_totals.len()),
        });
    }
    Ok(li_iaie
        .columns()
        .into_iter()
        .zip(y_totals)
        .map(|(col, &tot)| col.iter().map(|v| v.abs()).sum::<f64>() / (2.0 * tot))
        .collect())
}

/// Synthetic sampling-pool generator: log-normal marginals with a common
/// correlation factor, optional winsorizing cap, and per-factor activity
/// thinning that mimics cohorts where not every process is active in every
/// subject.
#[derive(Debug, Clone)]
pub struct PoolSpec {
    pub medians: Vec<f64>,
    pub log_sds: Vec<f64>,
    /// Common pairwise correlation of the latent log-normal draws, in [0, 1).
    pub correlation: f64,
    /// Per-factor probability that the factor is active in a pool entry.
    pub activity: Vec<f64>,
    /// Multiplier applied to inactive factors.
    pub inactive_scale: f64,
    /// Winsorizing cap as a multiple of each factor's median, if any.
    pub cap_multiple: Option<f64>,
    pub size: usize,
}

/// Draw a sampling pool (size x K) from the spec.
pub fn generate_pool(spec: &PoolSpec, seed: u64) -> Result<Array2<f64>> {
    let k = spec.medians.len();
    if spec.log_sds.len() != k || spec.activity.len() != k {
        return Err(Error::ShapeMismatch {
            context: "pool spec",
            expected: format!("{k} log_sds and activities"),
            found: format!("{}, {}", spec.log_sds.len(), spec.activity.len()),
        });
    }
    if spec.size == 0 {
        return Err(Error::EmptyPool);
    }
    if !(0.0..1.0).contains(&spec.correlation) {
        return Err(Error::InvalidProbability {
            name: "correlation",
            value: spec.correlation,
        });
    }
    let mut r = rng::stream(seed, "pool", &[]);
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let shared = spec.correlation.sqrt();
    let own = (1.0 - spec.correlation).sqrt();

    let mut pool = Array2::<f64>::zeros((spec.size, k));
    for row in 0..spec.size {
        let z0: f64 = std_normal.sample(&mut r);
        for f in 0..k {
            let z = shared * z0 + own * std_normal.sample(&mut r);
            let mut v = (spec.medians[f].ln() + spec.log_sds[f] * z).exp();
            if let Some(cap) = spec.cap_multiple {
                v = v.min(spec.medians[f] * cap);
            }
            pool[(row, f)] = v;
        }
        let mut any_active = false;
        for f in 0..k {
            if r.gen_bool(spec.activity[f].clamp(0.0, 1.0)) {
                any_active = true;
            } else {
                pool[(row, f)] *= spec.inactive_scale;
            }
        }
        if !any_active {
            let keep = r.gen_range(0..k);
            pool[(row, keep)] /= spec.inactive_scale.max(f64::MIN_POSITIVE);
        }
    }
    Ok(pool)
}

/// Draw a D x K simplex-column signature matrix with sparse gamma profiles,
/// rejecting candidates whose cosine similarity to an accepted column
/// exceeds `max_pairwise_cosine`.
pub fn generate_signatures(
    d: usize,
    k: usize,
    max_pairwise_cosine: f64,
    seed: u64,
) -> Result<Array2<f64>> {
    let mut r = rng::stream(seed, "signatures", &[]);
    let gamma = Gamma::new(0.2, 1.0).unwrap();
    let mut cols: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    while cols.len() < k {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InvalidConfig(format!(
                "could not draw {k} signatures at max pairwise cosine {max_pairwise_cosine}"
            )));
        }
        let mut v = Array1::<f64>::from_shape_fn(d, |_| gamma.sample(&mut r) + 0.002);
        let s = v.sum();
        v.mapv_inplace(|x| x / s);
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ok = cols.iter().all(|c| {
            let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            c.dot(&v) / (cn * vn) <= max_pairwise_cosine
        });
        if ok {
            cols.push(v);
        }
    }
    let mut out = Array2::<f64>::zeros((d, k));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).assign(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn tiny_config(seed: u64) -> SimConfig {
        SimConfig {
            lambda_true: array![[0.7, 0.1], [0.2, 0.2], [0.1, 0.7]],
            sample_pool: array![[40.0, 20.0], [60.0, 10.0], [30.0, 35.0]],
            psi_true: array![0.0, 25.0],
            sigma0: array![1.0, 1.0],
            sigma1: array![1.0, 2.0],
            pi: 0.4,
            n: 12,
            seed,
            row_labels: None,
        }
    }

    #[test]
    fn generation_is_bit_reproducible() {
        let cfg = tiny_config(7);
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        assert_eq!(a.l0, b.l0);
        assert_eq!(a.y.values(), b.y.values());
        assert_eq!(a.t, b.t);
    }

    #[test]
    fn noiseless_effect_is_exact() {
        let mut cfg = tiny_config(3);
        cfg.sigma0 = array![0.0, 0.0];
        cfg.sigma1 = array![0.0, 0.0];
        let ds = generate_dataset(&cfg).unwrap();
        let diff = &ds.l1 - &ds.l0;
        for i in 0..cfg.n {
            assert_abs_diff_eq!(diff[(0, i)], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(diff[(1, i)], 25.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn near_zero_pi_yields_all_control() {
        let mut cfg = tiny_config(5);
        cfg.pi = 1e-12;
        let ds = generate_dataset(&cfg).unwrap();
        assert_eq!(ds.t.n1(), 0);
        assert_eq!(ds.y.values(), &ds.y0);
    }

    #[test]
    fn observed_matches_realized_arm() {
        let ds = generate_dataset(&tiny_config(11)).unwrap();
        for i in 0..ds.t.len() {
            let expect = if ds.t.is_treated(i) {
                ds.y1.column(i)
            } else {
                ds.y0.column(i)
            };
            assert_eq!(ds.y.values().column(i), expect);
        }
        // integer-valued draws
        for v in ds.y.values().iter() {
            assert_eq!(v.fract(), 0.0);
        }
    }

    #[test]
    fn poisson_mean_matches_rate() {
        // column mean over many replicate draws stays within 3 SE of the rate
        let rate = 37.5;
        let reps = 10_000;
        let mut r = rng::stream(123, "poisson-check", &[]);
        let mut sum = 0.0;
        for _ in 0..reps {
            sum += draw_poisson(rate, &mut r);
        }
        let mean = sum / reps as f64;
        let se = (rate / reps as f64).sqrt();
        assert!((mean - rate).abs() < 3.0 * se, "mean {mean} vs rate {rate}");
    }

    #[test]
    fn oracle_iallo_is_exactly_the_potential_outcome() {
        let ds = generate_dataset(&tiny_config(13)).unwrap();
        for pi in [0.2, 0.8] {
            let est = estimate_iallo(
                &ds,
                Algorithm::Oracle,
                pi,
                2,
                2,
                &FitConfig::with_seed(1),
                0.5,
            )
            .unwrap();
            assert_eq!(est.n_skipped_runs, 0);
            for i in 0..ds.t.len() {
                for f in 0..2 {
                    assert_abs_diff_eq!(est.untreated[(f, i)], ds.l0[(f, i)], epsilon = 1e-12);
                    assert_abs_diff_eq!(est.treated[(f, i)], ds.l1[(f, i)], epsilon = 1e-12);
                }
            }
        }
        // hence zero indirect effects
        let a = estimate_iallo(&ds, Algorithm::Oracle, 0.2, 2, 2, &FitConfig::with_seed(1), 0.5)
            .unwrap();
        let b = estimate_iallo(&ds, Algorithm::Oracle, 0.8, 2, 2, &FitConfig::with_seed(1), 0.5)
            .unwrap();
        let paie = li_paie(&a.untreated, &b.untreated).unwrap();
        assert_eq!(paie, array![0.0, 0.0]);
    }

    #[test]
    fn li_paie_hand_table_and_antisymmetry() {
        let a = array![[3.0, 5.0]];
        let b = array![[1.0, 1.0]];
        assert_abs_diff_eq!(li_paie(&a, &b).unwrap()[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(li_paie(&b, &a).unwrap()[0], -3.0, epsilon = 1e-15);
        assert_eq!(li_paie(&a, &a).unwrap(), array![0.0]);
    }

    #[test]
    fn scaled_total_abs_hand_value() {
        let iaie = array![[10.0], [-10.0]];
        let v = scaled_total_abs_lipaie(&iaie, &[100.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.1, epsilon = 1e-15);
        let zero = scaled_total_abs_lipaie(&Array2::zeros((2, 1)), &[50.0]).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn truncation_is_monotone_in_pool_level() {
        let cfg = tiny_config(17);
        let mut raised = cfg.clone();
        raised.sample_pool = &cfg.sample_pool + 50.0;
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&raised).unwrap();
        for (x, y) in a.l0.iter().zip(b.l0.iter()) {
            assert!(y >= x);
        }
    }

    #[test]
    fn pool_generator_respects_caps_and_activity() {
        let spec = PoolSpec {
            medians: vec![100.0, 50.0],
            log_sds: vec![1.0, 0.3],
            correlation: 0.2,
            activity: vec![0.5, 1.0],
            inactive_scale: 0.02,
            cap_multiple: Some(4.0),
            size: 400,
        };
        let pool = generate_pool(&spec, 9).unwrap();
        assert_eq!(pool.dim(), (400, 2));
        for row in pool.rows() {
            assert!(row[0] <= 400.0 + 1e-9);
            assert!(row[1] > 0.0);
        }
        // thinning leaves a visibly bimodal factor 0
        let small = pool.column(0).iter().filter(|&&v| v < 10.0).count();
        assert!(small > 50, "expected inactive entries, got {small}");
    }

    #[test]
    fn signature_generator_meets_separation() {
        let lam = generate_signatures(48, 4, 0.25, 2).unwrap();
        for j in 0..4 {
            assert_abs_diff_eq!(lam.column(j).sum(), 1.0, epsilon = 1e-10);
        }
        let sim = crate::alignment::cosine_similarity_matrix(&lam, &lam).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(sim[(i, j)] <= 0.25 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sim_config_validation() {
        let mut cfg = tiny_config(1);
        cfg.pi = 1.5;
        assert!(matches!(
            generate_dataset(&cfg),
            Err(Error::InvalidProbability { .. })
        ));
        let mut cfg2 = tiny_config(1);
        cfg2.lambda_true = array![[0.5, 0.1], [0.2, 0.2], [0.1, 0.7]];
        assert!(generate_dataset(&cfg2).is_err());
    }
}
