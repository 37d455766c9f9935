//! The seven ATE-on-latent-outcome algorithms: two truth-based references
//! (oracle, observed outcome), two baselines (all data, random split), and
//! the imputation/stabilization family.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use std::fmt;
use std::str::FromStr;

use crate::data::{CountMatrix, TreatmentVector};
use crate::error::{Error, Result};
use crate::factorization::{nmf_fit, nnlm_fit, FactorModel, FitConfig};
use crate::imputation::{assemble_potential_matrices, impute_counterfactuals};
use crate::rng;

pub const DEFAULT_SPLIT_P: f64 = 0.5;

/// Estimation algorithm identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Oracle,
    ObservedOutcome,
    AllData,
    RandomSplit,
    Impute,
    Stabilize,
    ImputeStabilize,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Oracle,
        Algorithm::ObservedOutcome,
        Algorithm::AllData,
        Algorithm::RandomSplit,
        Algorithm::Impute,
        Algorithm::Stabilize,
        Algorithm::ImputeStabilize,
    ];

    /// The estimator each algorithm combines its learned outcomes with.
    pub fn estimator_form(&self) -> EstimatorForm {
        match self {
            Algorithm::Oracle | Algorithm::Impute | Algorithm::ImputeStabilize => {
                EstimatorForm::MeanIndividualTreatmentEffect
            }
            Algorithm::ObservedOutcome
            | Algorithm::AllData
            | Algorithm::RandomSplit
            | Algorithm::Stabilize => EstimatorForm::DifferenceOfMeans,
        }
    }

    /// True when the algorithm reads true potential outcomes instead of
    /// fitting a factor model (possible in simulation only).
    pub fn needs_truth(&self) -> bool {
        matches!(self, Algorithm::Oracle | Algorithm::ObservedOutcome)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Oracle => "oracle",
            Algorithm::ObservedOutcome => "observed_outcome",
            Algorithm::AllData => "all_data",
            Algorithm::RandomSplit => "random_split",
            Algorithm::Impute => "impute",
            Algorithm::Stabilize => "stabilize",
            Algorithm::ImputeStabilize => "impute_stabilize",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown algorithm '{s}'; expected one of: {}",
                    Algorithm::ALL.map(|a| a.name()).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorForm {
    /// Difference of treatment-group means of learned outcomes.
    DifferenceOfMeans,
    /// Mean of per-subject contrasts between both learned arms.
    MeanIndividualTreatmentEffect,
}

impl fmt::Display for EstimatorForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorForm::DifferenceOfMeans => "DM",
            EstimatorForm::MeanIndividualTreatmentEffect => "mITE",
        })
    }
}

/// True latent potential outcomes, available in simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomes {
    pub l0: Array2<f64>,
    pub l1: Array2<f64>,
}

impl PotentialOutcomes {
    pub fn new(l0: Array2<f64>, l1: Array2<f64>) -> Result<Self> {
        if l0.dim() != l1.dim() {
            return Err(Error::ShapeMismatch {
                context: "potential outcomes",
                expected: format!("{:?}", l0.dim()),
                found: format!("{:?}", l1.dim()),
            });
        }
        Ok(Self { l0, l1 })
    }

    /// K x N matrix of each subject's true outcome at their realized arm.
    pub fn observed_arm(&self, t: &TreatmentVector) -> Array2<f64> {
        let mut out = self.l0.clone();
        for i in t.treated_indices() {
            out.column_mut(i).assign(&self.l1.column(i));
        }
        out
    }

    /// Column subset/resample following the same index list as the data.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            l0: self.l0.select(Axis(1), idx),
            l1: self.l1.select(Axis(1), idx),
        }
    }
}

/// Learned latent outcomes produced by one algorithm run.
///
/// Matrices hold one column per covered subject, in `covered_subjects` order;
/// algorithms covering everyone use `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedOutcomes {
    pub under_treatment: Option<Array2<f64>>,
    pub under_control: Option<Array2<f64>>,
    pub observed_arm: Array2<f64>,
    pub covered_subjects: Vec<usize>,
}

impl LearnedOutcomes {
    fn covering_all(observed_arm: Array2<f64>) -> Self {
        let n = observed_arm.ncols();
        Self {
            under_treatment: None,
            under_control: None,
            observed_arm,
            covered_subjects: (0..n).collect(),
        }
    }

    /// Learned outcome column for original subject index `i`, at the arm the
    /// subject holds in the training assignment.
    pub fn observed_arm_for(&self, i: usize) -> Option<Array1<f64>> {
        let pos = self.covered_subjects.iter().position(|&s| s == i)?;
        Some(self.observed_arm.column(pos).to_owned())
    }
}

/// ATE estimate on the latent outcomes, in the factor order of the attached
/// model (alignment to a reference is a separate, explicit step).
#[derive(Debug, Clone, PartialEq)]
pub struct AteEstimate {
    pub psi: Array1<f64>,
    pub algorithm: Algorithm,
    pub estimator_form: EstimatorForm,
    /// Absent for the truth-based algorithms, which fit no factor model.
    pub factor_model: Option<FactorModel>,
}

/// Difference of treatment-group means over the covered subjects.
pub fn dm_estimator(outcomes: &LearnedOutcomes, t: &TreatmentVector) -> Result<Array1<f64>> {
    let k = outcomes.observed_arm.nrows();
    let mut sum1 = Array1::<f64>::zeros(k);
    let mut sum0 = Array1::<f64>::zeros(k);
    let (mut n1, mut n0) = (0usize, 0usize);
    for (pos, &subject) in outcomes.covered_subjects.iter().enumerate() {
        let col = outcomes.observed_arm.column(pos);
        if t.is_treated(subject) {
            sum1 += &col;
            n1 += 1;
        } else {
            sum0 += &col;
            n0 += 1;
        }
    }
    if n1 == 0 {
        return Err(Error::EmptyGroup("treated"));
    }
    if n0 == 0 {
        return Err(Error::EmptyGroup("untreated"));
    }
    Ok(sum1 / n1 as f64 - sum0 / n0 as f64)
}

/// Mean of per-subject contrasts between the two learned arms.
pub fn mite_estimator(outcomes: &LearnedOutcomes) -> Result<Array1<f64>> {
    let l1 = outcomes
        .under_treatment
        .as_ref()
        .ok_or(Error::MissingArm("under-treatment"))?;
    let l0 = outcomes
        .under_control
        .as_ref()
        .ok_or(Error::MissingArm("under-control"))?;
    if l0.dim() != l1.dim() {
        return Err(Error::ShapeMismatch {
            context: "mite_estimator",
            expected: format!("{:?}", l1.dim()),
            found: format!("{:?}", l0.dim()),
        });
    }
    Ok((l1 - l0).mean_axis(Axis(1)).expect("nonempty"))
}

fn nnlm_config(cfg: &FitConfig, stage: u64) -> FitConfig {
    cfg.reseeded(rng::derive_seed(cfg.seed, "nnlm", &[stage]))
}

/// Oracle: mean individual treatment effect on the true potential outcomes.
pub fn estimate_oracle(l0: &Array2<f64>, l1: &Array2<f64>) -> Result<AteEstimate> {
    if l0.dim() != l1.dim() {
        return Err(Error::ShapeMismatch {
            context: "estimate_oracle",
            expected: format!("{:?}", l0.dim()),
            found: format!("{:?}", l1.dim()),
        });
    }
    let psi = (l1 - l0).mean_axis(Axis(1)).ok_or(Error::EmptyMatrix)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::Oracle,
        estimator_form: EstimatorForm::MeanIndividualTreatmentEffect,
        factor_model: None,
    })
}

/// Observed outcome: difference of group means on the true observed-arm
/// latent outcomes.
pub fn estimate_observed_outcome(l_observed: &Array2<f64>, t: &TreatmentVector) -> Result<AteEstimate> {
    if l_observed.ncols() != t.len() {
        return Err(Error::ShapeMismatch {
            context: "estimate_observed_outcome",
            expected: format!("{} columns", t.len()),
            found: format!("{}", l_observed.ncols()),
        });
    }
    let outcomes = LearnedOutcomes::covering_all(l_observed.clone());
    let psi = dm_estimator(&outcomes, t)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::ObservedOutcome,
        estimator_form: EstimatorForm::DifferenceOfMeans,
        factor_model: None,
    })
}

/// All Data: NMF on the full matrix, then DM on the learned contributions.
pub fn estimate_all_data(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
) -> Result<AteEstimate> {
    t.require_both_groups()?;
    let model = nmf_fit(y, k, cfg)?;
    let outcomes = LearnedOutcomes::covering_all(model.contributions.clone());
    let psi = dm_estimator(&outcomes, t)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::AllData,
        estimator_form: EstimatorForm::DifferenceOfMeans,
        factor_model: Some(model),
    })
}

/// Draw the NMF half of a random split: `ceil(n * p)` indices, optionally
/// conditioned so `ensure_held_out` stays in the complement.
fn draw_split(
    n: usize,
    p: f64,
    seed: u64,
    ensure_held_out: Option<usize>,
) -> Result<Vec<usize>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability {
            name: "split_p",
            value: p,
        });
    }
    let take = (n as f64 * p).ceil() as usize;
    let mut candidates: Vec<usize> = match ensure_held_out {
        Some(i) => (0..n).filter(|&x| x != i).collect(),
        None => (0..n).collect(),
    };
    if take > candidates.len() {
        return Err(Error::SplitTooLarge {
            take,
            subject: ensure_held_out.unwrap_or(n),
            n,
        });
    }
    let mut r = rng::stream(seed, "split", &[]);
    for i in 0..take {
        let j = r.gen_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let mut s = candidates[..take].to_vec();
    s.sort_unstable();
    Ok(s)
}

fn complement(n: usize, s: &[usize]) -> Vec<usize> {
    let mut in_s = vec![false; n];
    for &i in s {
        in_s[i] = true;
    }
    (0..n).filter(|&i| !in_s[i]).collect()
}

fn random_split_outcomes(
    y: &CountMatrix,
    k: usize,
    split_p: f64,
    cfg: &FitConfig,
    ensure_held_out: Option<usize>,
) -> Result<(LearnedOutcomes, FactorModel)> {
    let n = y.n_cols();
    let s = draw_split(n, split_p, cfg.seed, ensure_held_out)?;
    if k > s.len() {
        return Err(Error::RankExceedsSubset {
            k,
            subset: "split",
            n: s.len(),
        });
    }
    let held_out = complement(n, &s);
    let model = nmf_fit(&y.select_columns(&s)?, k, cfg)?;
    let contributions = nnlm_fit(
        &y.select_columns(&held_out)?,
        &model.lambda,
        &nnlm_config(cfg, 0),
    )?;
    let outcomes = LearnedOutcomes {
        under_treatment: None,
        under_control: None,
        observed_arm: contributions,
        covered_subjects: held_out,
    };
    Ok((outcomes, model))
}

/// Random Split: NMF on a sampled half, NNLM on the held-out half, DM among
/// the held-out subjects. A split leaving an empty held-out group is an
/// error, never silently resampled.
pub fn estimate_random_split(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    split_p: f64,
    cfg: &FitConfig,
) -> Result<AteEstimate> {
    t.require_both_groups()?;
    let (outcomes, model) = random_split_outcomes(y, k, split_p, cfg, None)?;
    let psi = dm_estimator(&outcomes, t).map_err(|e| match e {
        Error::EmptyGroup(g) => Error::DegenerateSplit(g),
        other => other,
    })?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::RandomSplit,
        estimator_form: EstimatorForm::DifferenceOfMeans,
        factor_model: Some(model),
    })
}

/// Impute: NMF on observed data for the realized arm, NNLM on the imputed
/// counterfactual matrix for the other arm, then mITE.
pub fn estimate_impute(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
) -> Result<AteEstimate> {
    let imp = impute_counterfactuals(y, t)?;
    let model = nmf_fit(y, k, cfg)?;
    let counterfactual = nnlm_fit(
        &y.with_values(imp.y_counterfactual.clone())?,
        &model.lambda,
        &nnlm_config(cfg, 0),
    )?;

    let mut under_treatment = counterfactual.clone();
    let mut under_control = counterfactual;
    for i in 0..y.n_cols() {
        if t.is_treated(i) {
            under_treatment
                .column_mut(i)
                .assign(&model.contributions.column(i));
        } else {
            under_control
                .column_mut(i)
                .assign(&model.contributions.column(i));
        }
    }
    let outcomes = LearnedOutcomes {
        under_treatment: Some(under_treatment),
        under_control: Some(under_control),
        observed_arm: model.contributions.clone(),
        covered_subjects: (0..y.n_cols()).collect(),
    };
    let psi = mite_estimator(&outcomes)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::Impute,
        estimator_form: EstimatorForm::MeanIndividualTreatmentEffect,
        factor_model: Some(model),
    })
}

fn stabilize_outcomes(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
) -> Result<(LearnedOutcomes, FactorModel)> {
    let untreated = t.untreated_indices();
    if untreated.is_empty() {
        return Err(Error::EmptyGroup("untreated"));
    }
    if k > untreated.len() {
        return Err(Error::RankExceedsSubset {
            k,
            subset: "untreated",
            n: untreated.len(),
        });
    }
    let model = nmf_fit(&y.select_columns(&untreated)?, k, cfg)?;

    let treated = t.treated_indices();
    let mut observed_arm = Array2::<f64>::zeros((k, y.n_cols()));
    for (pos, &i) in untreated.iter().enumerate() {
        observed_arm
            .column_mut(i)
            .assign(&model.contributions.column(pos));
    }
    if !treated.is_empty() {
        let treated_contribs = nnlm_fit(
            &y.select_columns(&treated)?,
            &model.lambda,
            &nnlm_config(cfg, 0),
        )?;
        for (pos, &i) in treated.iter().enumerate() {
            observed_arm.column_mut(i).assign(&treated_contribs.column(pos));
        }
    }
    let outcomes = LearnedOutcomes::covering_all(observed_arm);
    Ok((outcomes, model))
}

/// Stabilize: NMF on untreated columns only, NNLM on treated columns, DM.
pub fn estimate_stabilize(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
) -> Result<AteEstimate> {
    t.require_both_groups()?;
    let (outcomes, model) = stabilize_outcomes(y, t, k, cfg)?;
    let psi = dm_estimator(&outcomes, t)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::Stabilize,
        estimator_form: EstimatorForm::DifferenceOfMeans,
        factor_model: Some(model),
    })
}

/// Impute and Stabilize: impute both potential matrices, fit NMF on the
/// all-control matrix, NNLM on the all-treated matrix, then mITE over all
/// subjects.
pub fn estimate_impute_stabilize(
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
) -> Result<AteEstimate> {
    let imp = impute_counterfactuals(y, t)?;
    let (y0, y1) = assemble_potential_matrices(y, &imp, t)?;
    let model = nmf_fit(&y0, k, cfg)?;
    let under_treatment = nnlm_fit(&y1, &model.lambda, &nnlm_config(cfg, 0))?;

    let mut observed_arm = model.contributions.clone();
    for i in t.treated_indices() {
        observed_arm.column_mut(i).assign(&under_treatment.column(i));
    }
    let outcomes = LearnedOutcomes {
        under_treatment: Some(under_treatment),
        under_control: Some(model.contributions.clone()),
        observed_arm,
        covered_subjects: (0..y.n_cols()).collect(),
    };
    let psi = mite_estimator(&outcomes)?;
    Ok(AteEstimate {
        psi,
        algorithm: Algorithm::ImputeStabilize,
        estimator_form: EstimatorForm::MeanIndividualTreatmentEffect,
        factor_model: Some(model),
    })
}

/// Contributions of the observed data against a consensus factor matrix.
pub fn consensus_contributions(
    y: &CountMatrix,
    consensus_lambda: &Array2<f64>,
    cfg: &FitConfig,
) -> Result<Array2<f64>> {
    nnlm_fit(y, consensus_lambda, cfg)
}

/// Dispatch an algorithm by name. Truth-based algorithms require `truth`.
pub fn run_algorithm(
    algorithm: Algorithm,
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
    split_p: f64,
    truth: Option<&PotentialOutcomes>,
) -> Result<AteEstimate> {
    match algorithm {
        Algorithm::Oracle => {
            let tr = truth.ok_or(Error::TruthRequired("oracle"))?;
            estimate_oracle(&tr.l0, &tr.l1)
        }
        Algorithm::ObservedOutcome => {
            let tr = truth.ok_or(Error::TruthRequired("observed_outcome"))?;
            estimate_observed_outcome(&tr.observed_arm(t), t)
        }
        Algorithm::AllData => estimate_all_data(y, t, k, cfg),
        Algorithm::RandomSplit => estimate_random_split(y, t, k, split_p, cfg),
        Algorithm::Impute => estimate_impute(y, t, k, cfg),
        Algorithm::Stabilize => estimate_stabilize(y, t, k, cfg),
        Algorithm::ImputeStabilize => estimate_impute_stabilize(y, t, k, cfg),
    }
}

/// Observed-arm learned outcomes for one training assignment; the minimal
/// per-algorithm run used by the interference metrics.
///
/// For Random Split the split is drawn conditioned on `ensure_covered`
/// staying in the held-out half, so that subject's outcome is learned.
pub fn learned_observed_outcomes(
    algorithm: Algorithm,
    y: &CountMatrix,
    t: &TreatmentVector,
    k: usize,
    cfg: &FitConfig,
    split_p: f64,
    truth: Option<&PotentialOutcomes>,
    ensure_covered: Option<usize>,
) -> Result<LearnedOutcomes> {
    match algorithm {
        Algorithm::Oracle => {
            let tr = truth.ok_or(Error::TruthRequired("oracle"))?;
            Ok(LearnedOutcomes::covering_all(tr.observed_arm(t)))
        }
        Algorithm::ObservedOutcome => {
            let tr = truth.ok_or(Error::TruthRequired("observed_outcome"))?;
            let observed = tr.observed_arm(t);
            let k_dim = observed.nrows();
            let mut out = Array2::<f64>::zeros((k_dim, t.len()));
            for group in [t.untreated_indices(), t.treated_indices()] {
                if group.is_empty() {
                    continue;
                }
                let mut mean = Array1::<f64>::zeros(k_dim);
                for &i in &group {
                    mean += &observed.column(i);
                }
                mean /= group.len() as f64;
                for &i in &group {
                    out.column_mut(i).assign(&mean);
                }
            }
            Ok(LearnedOutcomes::covering_all(out))
        }
        Algorithm::AllData | Algorithm::Impute => {
            // The observed-arm outcomes of Impute come from the same NMF on
            // the observed matrix as All Data; imputation only fills the
            // counterfactual arm.
            let model = nmf_fit(y, k, cfg)?;
            Ok(LearnedOutcomes::covering_all(model.contributions))
        }
        Algorithm::RandomSplit => {
            let (outcomes, _) = random_split_outcomes(y, k, split_p, cfg, ensure_covered)?;
            Ok(outcomes)
        }
        Algorithm::Stabilize => {
            let (outcomes, _) = stabilize_outcomes(y, t, k, cfg)?;
            Ok(outcomes)
        }
        Algorithm::ImputeStabilize => {
            let imp = impute_counterfactuals(y, t)?;
            let (y0, y1) = assemble_potential_matrices(y, &imp, t)?;
            let model = nmf_fit(&y0, k, cfg)?;
            let under_treatment = nnlm_fit(&y1, &model.lambda, &nnlm_config(cfg, 0))?;
            let mut observed_arm = model.contributions;
            for i in t.treated_indices() {
                observed_arm.column_mut(i).assign(&under_treatment.column(i));
            }
            Ok(LearnedOutcomes::covering_all(observed_arm))
        }
    }
}
