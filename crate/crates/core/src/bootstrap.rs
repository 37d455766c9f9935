//! Bootstrap wrapper around the estimation algorithms: resample subjects with
//! replacement, re-run the pipeline, align factor replicates, and summarize.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use crate::alignment::{
    consensus_align_full, cosine_similarity_matrix, hungarian_align, permute_columns,
    permute_vector,
};
use crate::data::{CountMatrix, TreatmentVector};
use crate::error::{Error, Result};
use crate::estimators::{run_algorithm, Algorithm, PotentialOutcomes};
use crate::factorization::FitConfig;
use crate::rng;

/// Bootstrap summary: consensus factors, mean effect, and percentile CIs.
#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// Element-wise mean of the aligned replicate estimates.
    pub psi_mean: Array1<f64>,
    /// 2.5% empirical quantile per factor.
    pub ci_lower: Array1<f64>,
    /// 97.5% empirical quantile per factor.
    pub ci_upper: Array1<f64>,
    /// Mean of aligned replicate factor matrices, re-normalized to simplex
    /// columns. Absent for the truth-based algorithms, which fit none.
    pub consensus_lambda: Option<Array2<f64>>,
    /// Aligned per-replicate estimates, one row per successful replicate.
    pub replicate_psis: Array2<f64>,
    /// Replicates dropped because resampling left a treatment arm empty (or
    /// otherwise rank-infeasible); dropped, counted, never resampled.
    pub n_failed_replicates: usize,
    /// Original replicate index of each row of `replicate_psis`.
    pub replicate_indices: Vec<usize>,
    /// Per-factor cosine similarity of each aligned replicate against its
    /// alignment target (the reference, or the final consensus).
    pub replicate_similarities: Array2<f64>,
}

/// Linear interpolation of the order statistics with plotting position
/// (i-1)/(n-1); `q = 0` gives the minimum, `q = 1` the maximum.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidQuantile(q));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    let n = sorted.len();
    if n == 1 {
        return Ok(sorted[0]);
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == n {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

struct Replicate {
    index: usize,
    psi: Array1<f64>,
    lambda: Option<Array2<f64>>,
}

/// Resample subjects with replacement, re-run `algorithm` on each replicate,
/// align replicate factors (to `reference` when given, else by iterative
/// consensus), and summarize the aligned estimates.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ate(
    y: &CountMatrix,
    t: &TreatmentVector,
    algorithm: Algorithm,
    k: usize,
    n_replicates: usize,
    cfg: &FitConfig,
    reference: Option<&Array2<f64>>,
    split_p: f64,
    truth: Option<&PotentialOutcomes>,
) -> Result<BootstrapResult> {
    if n_replicates == 0 {
        return Err(Error::InvalidConfig("bootstrap needs B >= 1".into()));
    }
    t.require_both_groups()?;
    let n = y.n_cols();

    let outcomes: Vec<Option<Replicate>> = (0..n_replicates)
        .into_par_iter()
        .map(|b| {
            let rep_seed = rng::derive_seed(cfg.seed, "bootstrap-replicate", &[b as u64]);
            let mut resample_rng = rng::stream(rep_seed, "resample", &[]);
            let idx: Vec<usize> = (0..n).map(|_| resample_rng.gen_range(0..n)).collect();
            let yb = y.resample_columns(&idx).ok()?;
            let tb = t.select(&idx);
            let truth_b = truth.map(|tr| tr.select(&idx));
            let est = run_algorithm(
                algorithm,
                &yb,
                &tb,
                k,
                &cfg.reseeded(rep_seed),
                split_p,
                truth_b.as_ref(),
            )
            .ok()?;
            Some(Replicate {
                index: b,
                psi: est.psi,
                lambda: est.factor_model.map(|m| m.lambda),
            })
        })
        .collect();

    let mut ok: Vec<Replicate> = Vec::with_capacity(n_replicates);
    let mut n_failed = 0usize;
    for o in outcomes {
        match o {
            Some(r) => ok.push(r),
            None => n_failed += 1,
        }
    }
    if ok.is_empty() {
        return Err(Error::AllReplicatesFailed(n_replicates));
    }
    let k_dim = ok[0].psi.len();
    let has_models = ok.iter().all(|r| r.lambda.is_some());

    let mut aligned_psis: Vec<Array1<f64>> = Vec::with_capacity(ok.len());
    let mut aligned_lambdas: Vec<Array2<f64>> = Vec::with_capacity(ok.len());
    let mut consensus: Option<Array2<f64>> = None;

    if has_models {
        if let Some(reference) = reference {
            for r in &ok {
                let lam = r.lambda.as_ref().unwrap();
                let p = hungarian_align(lam, reference)?;
                aligned_lambdas.push(permute_columns(lam, &p.mapping));
                aligned_psis.push(Array1::from(permute_vector(r.psi.as_slice().unwrap(), &p.mapping)));
            }
            let mut mean = &aligned_lambdas[0] * 0.0;
            for lam in &aligned_lambdas {
                mean += lam;
            }
            mean /= aligned_lambdas.len() as f64;
            for mut col in mean.columns_mut() {
                let s: f64 = col.iter().sum();
                if s > 0.0 {
                    col.mapv_inplace(|v| v / s);
                }
            }
            consensus = Some(mean);
        } else {
            let lambdas: Vec<Array2<f64>> =
                ok.iter().map(|r| r.lambda.clone().unwrap()).collect();
            let out = consensus_align_full(&lambdas)?;
            for (r, p) in ok.iter().zip(out.permutations.iter()) {
                aligned_psis.push(Array1::from(permute_vector(r.psi.as_slice().unwrap(), &p.mapping)));
            }
            aligned_lambdas = out.aligned;
            consensus = Some(out.consensus);
        }
    } else {
        // Truth-based algorithms are already in the true factor order.
        aligned_psis = ok.iter().map(|r| r.psi.clone()).collect();
    }

    // Per-factor similarity against the alignment target.
    let similarity_target = match (reference, &consensus) {
        (Some(r), _) => Some(r.to_owned()),
        (None, Some(c)) => Some(c.clone()),
        _ => None,
    };
    let mut replicate_similarities = Array2::<f64>::from_elem((ok.len(), k_dim), f64::NAN);
    if let Some(target) = similarity_target {
        for (row, lam) in aligned_lambdas.iter().enumerate() {
            let sim = cosine_similarity_matrix(&target, lam)?;
            for j in 0..k_dim {
                replicate_similarities[(row, j)] = sim[(j, j)];
            }
        }
    }

    let mut replicate_psis = Array2::<f64>::zeros((aligned_psis.len(), k_dim));
    for (row, psi) in aligned_psis.iter().enumerate() {
        replicate_psis.row_mut(row).assign(psi);
    }

    let b_ok = aligned_psis.len() as f64;
    let mut psi_mean = Array1::<f64>::zeros(k_dim);
    let mut ci_lower = Array1::<f64>::zeros(k_dim);
    let mut ci_upper = Array1::<f64>::zeros(k_dim);
    for j in 0..k_dim {
        let col: Vec<f64> = replicate_psis.column(j).to_vec();
        psi_mean[j] = col.iter().sum::<f64>() / b_ok;
        ci_lower[j] = empirical_quantile(&col, 0.025)?;
        ci_upper[j] = empirical_quantile(&col, 0.975)?;
    }

    Ok(BootstrapResult {
        psi_mean,
        ci_lower,
        ci_upper,
        consensus_lambda: consensus,
        replicate_psis,
        n_failed_replicates: n_failed,
        replicate_indices: ok.iter().map(|r| r.index).collect(),
        replicate_similarities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;

    #[test]
    fn quantile_rule_values() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        assert_relative_eq!(
            empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.025).unwrap(),
            1.075,
            max_relative = 1e-14
        );
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn quantile_is_monotone_in_q() {
        let xs = [0.3, 9.1, 4.4, 2.2, 7.7, 5.0];
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=20 {
            let q = i as f64 / 20.0;
            let v = empirical_quantile(&xs, q).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    fn toy_data() -> (CountMatrix, TreatmentVector) {
        let lam = array![[0.8, 0.1], [0.15, 0.2], [0.05, 0.7]];
        let mut l = Array2::<f64>::zeros((2, 12));
        for i in 0..12 {
            l[(0, i)] = 40.0 + 3.0 * i as f64;
            l[(1, i)] = 25.0 + 2.0 * ((i * 7) % 5) as f64 + if i % 3 == 0 { 30.0 } else { 0.0 };
        }
        let y = CountMatrix::from_values(lam.dot(&l)).unwrap();
        let t = TreatmentVector::new(vec![0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 1]).unwrap();
        (y, t)
    }

    #[test]
    fn single_replicate_has_degenerate_interval() {
        let (y, t) = toy_data();
        let r = bootstrap_ate(
            &y,
            &t,
            Algorithm::AllData,
            2,
            1,
            &FitConfig::with_seed(5),
            None,
            0.5,
            None,
        )
        .unwrap();
        assert_eq!(r.replicate_psis.nrows(), 1);
        assert_eq!(r.psi_mean, r.ci_lower);
        assert_eq!(r.psi_mean, r.ci_upper);
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let (y, t) = toy_data();
        let cfg = FitConfig::with_seed(11);
        let run = || {
            bootstrap_ate(&y, &t, Algorithm::ImputeStabilize, 2, 6, &cfg, None, 0.5, None).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.replicate_psis, b.replicate_psis);
        assert_eq!(a.psi_mean, b.psi_mean);
        assert_eq!(a.consensus_lambda, b.consensus_lambda);
    }

    #[test]
    fn psi_mean_is_exact_row_mean_and_cis_ordered() {
        let (y, t) = toy_data();
        let r = bootstrap_ate(
            &y,
            &t,
            Algorithm::AllData,
            2,
            8,
            &FitConfig::with_seed(3),
            None,
            0.5,
            None,
        )
        .unwrap();
        for j in 0..2 {
            let col: Vec<f64> = r.replicate_psis.column(j).to_vec();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            assert_eq!(r.psi_mean[j], mean);
            assert!(r.ci_lower[j] <= r.ci_upper[j]);
        }
        let sums = r
            .consensus_lambda
            .unwrap()
            .sum_axis(ndarray::Axis(0));
        for s in sums {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_replicates_are_counted_not_resampled() {
        // With a single treated subject, many resamples drop it entirely.
        let lam = array![[0.9, 0.2], [0.1, 0.8]];
        let l = array![
            [30.0, 32.0, 28.0, 31.0, 29.0, 30.0],
            [12.0, 11.0, 13.0, 12.0, 11.5, 12.5]
        ];
        let y = CountMatrix::from_values(lam.dot(&l)).unwrap();
        let t = TreatmentVector::new(vec![1, 0, 0, 0, 0, 0]).unwrap();
        let r = bootstrap_ate(
            &y,
            &t,
            Algorithm::AllData,
            2,
            40,
            &FitConfig::with_seed(2),
            None,
            0.5,
            None,
        )
        .unwrap();
        assert!(r.n_failed_replicates > 0);
        assert_eq!(
            r.replicate_psis.nrows() + r.n_failed_replicates,
            40
        );
    }

    #[test]
    fn reference_alignment_never_hurts_similarity() {
        let (y, t) = toy_data();
        let reference = array![[0.8, 0.1], [0.15, 0.2], [0.05, 0.7]];
        let r = bootstrap_ate(
            &y,
            &t,
            Algorithm::AllData,
            2,
            6,
            &FitConfig::with_seed(9),
            Some(&reference),
            0.5,
            None,
        )
        .unwrap();
        // every aligned per-factor similarity beats or ties the unaligned
        // diagonal seen by the same replicate under the identity mapping
        for v in r.replicate_similarities.iter() {
            assert!(v.is_finite());
        }
        let mean_aligned = r.replicate_similarities.mean().unwrap();
        assert!(mean_aligned > 0.8, "aligned similarity too low: {mean_aligned}");
    }

    #[test]
    fn oracle_bootstrap_needs_no_alignment() {
        let (y, t) = toy_data();
        let truth = PotentialOutcomes::new(
            Array2::from_elem((2, 12), 10.0),
            Array2::from_elem((2, 12), 14.0),
        )
        .unwrap();
        let r = bootstrap_ate(
            &y,
            &t,
            Algorithm::Oracle,
            2,
            5,
            &FitConfig::with_seed(1),
            None,
            0.5,
            Some(&truth),
        )
        .unwrap();
        assert!(r.consensus_lambda.is_none());
        for j in 0..2 {
            assert_abs_diff_eq!(r.psi_mean[j], 4.0, epsilon = 1e-12);
        }
    }
}
