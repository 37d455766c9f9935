//! Factor matching by total cosine similarity: Hungarian assignment between
//! estimated and reference columns, plus iterative consensus alignment of
//! bootstrap replicates.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::factorization::FactorModel;

/// Tolerance absorbing float summation-order noise when checking whether a
/// candidate assignment attains the optimal total.
const ASSIGN_TIE_TOL: f64 = 1e-12;

/// Column assignment of an estimated factor matrix onto a reference.
///
/// `mapping[j]` is the estimated column matched to reference column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPermutation {
    pub mapping: Vec<usize>,
    pub total_similarity: f64,
}

impl FactorPermutation {
    pub fn identity(k: usize) -> Self {
        Self {
            mapping: (0..k).collect(),
            total_similarity: k as f64,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        let mut seen = vec![false; k];
        if self.mapping.len() != k {
            return Err(Error::InvalidPermutation(self.mapping.clone(), k));
        }
        for &m in &self.mapping {
            if m >= k || seen[m] {
                return Err(Error::InvalidPermutation(self.mapping.clone(), k));
            }
            seen[m] = true;
        }
        Ok(())
    }
}

fn column_norm(col: ArrayView1<f64>) -> f64 {
    col.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Pairwise cosine similarities between the columns of `a` and of `b`.
pub fn cosine_similarity_matrix(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch {
            context: "cosine_similarity_matrix",
            expected: format!("{} rows", a.nrows()),
            found: format!("{} rows", b.nrows()),
        });
    }
    let na: Vec<f64> = a.columns().into_iter().map(column_norm).collect();
    let nb: Vec<f64> = b.columns().into_iter().map(column_norm).collect();
    for (k, &v) in na.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::ZeroFactorColumn(k));
        }
    }
    for (k, &v) in nb.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::ZeroFactorColumn(k));
        }
    }
    let mut out = a.t().dot(b);
    for ((i, j), v) in out.indexed_iter_mut() {
        *v /= na[i] * nb[j];
    }
    Ok(out)
}

/// Shortest-augmenting-path Hungarian algorithm, minimizing total cost over a
/// square matrix. Returns, for each row, its assigned column.
fn hungarian_min(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[j] = row (1-based) assigned to column j
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}

/// Maximum-total assignment value for `sim` restricted to rows `rows` and
/// columns `cols` (equal lengths).
fn max_assignment_value(sim: &Array2<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let m = rows.len();
    if m == 0 {
        return 0.0;
    }
    let sub = Array2::from_shape_fn((m, m), |(i, j)| -sim[(rows[i], cols[j])]);
    let assign = hungarian_min(&sub);
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| sim[(rows[i], cols[j])])
        .sum()
}

/// Optimal assignment maximizing `sum_j sim[j, mapping[j]]`, refined so that
/// among exactly-optimal assignments the lexicographically smallest mapping
/// is returned.
fn optimal_assignment(sim: &Array2<f64>) -> (Vec<usize>, f64) {
    let k = sim.nrows();
    let all: Vec<usize> = (0..k).collect();
    let best = max_assignment_value(sim, &all, &all);
    let tol = ASSIGN_TIE_TOL * (1.0 + best.abs());

    let mut mapping = Vec::with_capacity(k);
    let mut remaining: Vec<usize> = all.clone();
    let mut prefix = 0.0;
    for j in 0..k {
        let rest_rows: Vec<usize> = (j + 1..k).collect();
        let mut chosen = None;
        for (pos, &c) in remaining.iter().enumerate() {
            let rest_cols: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&x| x != c)
                .collect();
            let rest = max_assignment_value(sim, &rest_rows, &rest_cols);
            if prefix + sim[(j, c)] + rest >= best - tol {
                chosen = Some(pos);
                break;
            }
        }
        let pos = chosen.expect("refinement must find a column attaining the optimum");
        let c = remaining.remove(pos);
        prefix += sim[(j, c)];
        mapping.push(c);
    }
    let total = (0..k).map(|j| sim[(j, mapping[j])]).sum();
    (mapping, total)
}

/// Match estimated factor columns to reference columns, maximizing total
/// cosine similarity; ties break to the lexicographically smallest mapping.
pub fn hungarian_align(estimated: &Array2<f64>, reference: &Array2<f64>) -> Result<FactorPermutation> {
    if estimated.ncols() != reference.ncols() {
        return Err(Error::FactorCountMismatch {
            estimated: estimated.ncols(),
            reference: reference.ncols(),
        });
    }
    let sim = cosine_similarity_matrix(reference, estimated)?;
    let (mapping, total_similarity) = optimal_assignment(&sim);
    Ok(FactorPermutation {
        mapping,
        total_similarity,
    })
}

/// Reorder columns of a plain matrix: output column `j` is input column
/// `mapping[j]`.
pub fn permute_columns(m: &Array2<f64>, mapping: &[usize]) -> Array2<f64> {
    m.select(Axis(1), mapping)
}

/// Reorder a model's factor columns and contribution rows consistently;
/// the product is unchanged.
pub fn apply_permutation(m: &FactorModel, p: &FactorPermutation) -> Result<FactorModel> {
    p.validate(m.n_factors())?;
    Ok(FactorModel {
        lambda: m.lambda.select(Axis(1), &p.mapping),
        contributions: m.contributions.select(Axis(0), &p.mapping),
        kl_at_convergence: m.kl_at_convergence,
        n_iterations_used: m.n_iterations_used,
        kl_trace: m.kl_trace.clone(),
    })
}

/// Reorder the entries of a factor-indexed vector with the same mapping used
/// on the factor columns.
pub fn permute_vector(v: &[f64], mapping: &[usize]) -> Vec<f64> {
    mapping.iter().map(|&m| v[m]).collect()
}

pub(crate) struct ConsensusOutcome {
    pub aligned: Vec<Array2<f64>>,
    pub permutations: Vec<FactorPermutation>,
    pub consensus: Array2<f64>,
}

pub(crate) fn consensus_align_full(lambdas: &[Array2<f64>]) -> Result<ConsensusOutcome> {
    if lambdas.is_empty() {
        return Err(Error::EmptyReplicateList);
    }
    let dim = lambdas[0].dim();
    for l in lambdas {
        if l.dim() != dim {
            return Err(Error::ShapeMismatch {
                context: "consensus_align",
                expected: format!("{dim:?}"),
                found: format!("{:?}", l.dim()),
            });
        }
    }

    let k = lambdas[0].ncols();
    let mut aligned = vec![lambdas[0].clone()];
    let mut permutations = vec![FactorPermutation::identity(k)];
    let mut running_sum = lambdas[0].clone();

    // Replicate b is aligned against the raw element-wise mean of the
    // previously aligned replicates.
    for (b, lam) in lambdas.iter().enumerate().skip(1) {
        let mean = &running_sum / b as f64;
        let p = hungarian_align(lam, &mean)?;
        let reordered = permute_columns(lam, &p.mapping);
        running_sum += &reordered;
        aligned.push(reordered);
        permutations.push(p);
    }

    let mut consensus = running_sum / lambdas.len() as f64;
    for mut col in consensus.columns_mut() {
        let s: f64 = col.iter().sum();
        if s > 0.0 {
            col.mapv_inplace(|v| v / s);
        }
    }
    Ok(ConsensusOutcome {
        aligned,
        permutations,
        consensus,
    })
}

/// Align a list of replicate factor matrices and return them together with
/// their element-wise-mean consensus, re-normalized to simplex columns.
pub fn consensus_align(lambdas: &[Array2<f64>]) -> Result<(Vec<Array2<f64>>, Array2<f64>)> {
    let out = consensus_align_full(lambdas)?;
    Ok((out.aligned, out.consensus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;
    use rand::Rng;

    /// Brute-force oracle: enumerate all permutations in lexicographic order,
    /// keeping the first strictly-better total.
    fn brute_force(sim: &Array2<f64>) -> (Vec<usize>, f64) {
        let k = sim.nrows();
        let mut idx: Vec<usize> = (0..k).collect();
        let mut best: Option<(Vec<usize>, f64)> = None;
        permute_all(&mut idx, 0, &mut |perm| {
            let tot: f64 = (0..k).map(|j| sim[(j, perm[j])]).sum();
            match &best {
                Some((_, b)) if tot <= *b => {}
                _ => best = Some((perm.to_vec(), tot)),
            }
        });
        best.unwrap()
    }

    fn permute_all(idx: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize])) {
        if at == idx.len() {
            f(idx);
            return;
        }
        for i in at..idx.len() {
            idx.swap(at, i);
            permute_all(idx, at + 1, f);
            idx.swap(at, i);
        }
        // restore lexicographic order for deterministic enumeration
        idx[at..].sort_unstable();
    }

    #[test]
    fn cosine_orthogonal_identity() {
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let s = cosine_similarity_matrix(&a, &a).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 1)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cosine_hand_value_and_scale_invariance() {
        let a = array![[1.0], [0.0]];
        let b = array![[1.0], [1.0]];
        let s = cosine_similarity_matrix(&a, &b).unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0 / 2.0f64.sqrt(), max_relative = 1e-14);

        let b_scaled = &b * 37.5;
        let s2 = cosine_similarity_matrix(&a, &b_scaled).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], s2[(0, 0)], epsilon = 1e-14);
    }

    #[test]
    fn cosine_rejects_zero_column() {
        let a = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            cosine_similarity_matrix(&a, &a),
            Err(Error::ZeroFactorColumn(1))
        ));
    }

    #[test]
    fn align_identity_and_reversal() {
        let r = array![[0.9, 0.1, 0.2], [0.05, 0.8, 0.1], [0.05, 0.1, 0.7]];
        let p = hungarian_align(&r, &r).unwrap();
        assert_eq!(p.mapping, vec![0, 1, 2]);
        assert_relative_eq!(p.total_similarity, 3.0, max_relative = 1e-12);

        let reversed = permute_columns(&r, &[2, 1, 0]);
        let p2 = hungarian_align(&reversed, &r).unwrap();
        assert_eq!(p2.mapping, vec![2, 1, 0]);
    }

    #[test]
    fn align_matches_brute_force_on_random_matrices() {
        let mut rng = crate::rng::stream(2024, "test-align", &[]);
        for trial in 0..300 {
            let k = 2 + (trial % 4);
            let est = Array2::from_shape_fn((6, k), |_| rng.gen_range(0.01..1.0));
            let reference = Array2::from_shape_fn((6, k), |_| rng.gen_range(0.01..1.0));
            let p = hungarian_align(&est, &reference).unwrap();
            let sim = cosine_similarity_matrix(&reference, &est).unwrap();
            let (bf_map, bf_tot) = brute_force(&sim);
            assert_eq!(p.mapping, bf_map, "trial {trial}");
            assert_relative_eq!(p.total_similarity, bf_tot, max_relative = 1e-12);
        }
    }

    #[test]
    fn align_breaks_exact_ties_lexicographically() {
        // Two identical estimated columns: mappings (0,1,2) and (1,0,2) tie.
        let est = array![[0.5, 0.5, 0.1], [0.3, 0.3, 0.8], [0.2, 0.2, 0.1]];
        let reference = array![[0.6, 0.6, 0.1], [0.2, 0.2, 0.8], [0.2, 0.2, 0.1]];
        let p = hungarian_align(&est, &reference).unwrap();
        assert_eq!(p.mapping, vec![0, 1, 2]);
    }

    #[test]
    fn apply_permutation_preserves_product() {
        let m = FactorModel {
            lambda: array![[0.2, 0.7], [0.8, 0.3]],
            contributions: array![[5.0, 1.0], [2.0, 9.0]],
            kl_at_convergence: 0.0,
            n_iterations_used: 1,
            kl_trace: vec![],
        };
        let p = FactorPermutation {
            mapping: vec![1, 0],
            total_similarity: 2.0,
        };
        let out = apply_permutation(&m, &p).unwrap();
        let before = m.product();
        let after = out.product();
        for (a, b) in before.iter().zip(after.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // group property: applying the inverse restores the original
        let inv = FactorPermutation {
            mapping: vec![1, 0],
            total_similarity: 2.0,
        };
        let back = apply_permutation(&out, &inv).unwrap();
        assert_eq!(back.lambda, m.lambda);
        assert_eq!(back.contributions, m.contributions);
    }

    #[test]
    fn apply_permutation_rejects_non_permutation() {
        let m = FactorModel {
            lambda: array![[0.2, 0.7], [0.8, 0.3]],
            contributions: array![[5.0, 1.0], [2.0, 9.0]],
            kl_at_convergence: 0.0,
            n_iterations_used: 1,
            kl_trace: vec![],
        };
        let bad = FactorPermutation {
            mapping: vec![0, 0],
            total_similarity: 0.0,
        };
        assert!(apply_permutation(&m, &bad).is_err());
    }

    #[test]
    fn consensus_single_replicate_is_identity() {
        let l = array![[0.3, 0.6], [0.7, 0.4]];
        let (aligned, consensus) = consensus_align(std::slice::from_ref(&l)).unwrap();
        assert_eq!(aligned.len(), 1);
        for (a, b) in consensus.iter().zip(l.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn consensus_recovers_matrix_from_permuted_copies() {
        let base = array![[0.5, 0.1, 0.3], [0.2, 0.2, 0.6], [0.3, 0.7, 0.1]];
        let copies = vec![
            base.clone(),
            permute_columns(&base, &[2, 0, 1]),
            permute_columns(&base, &[1, 2, 0]),
            permute_columns(&base, &[2, 1, 0]),
        ];
        let (aligned, consensus) = consensus_align(&copies).unwrap();
        for a in &aligned {
            for (x, y) in a.iter().zip(base.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
        }
        for (x, y) in consensus.iter().zip(base.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn consensus_identifies_near_permutation() {
        let base = array![[0.5, 0.1], [0.2, 0.2], [0.3, 0.7]];
        let mut noisy = permute_columns(&base, &[1, 0]);
        noisy.mapv_inplace(|v| v + 1e-3);
        let out = consensus_align_full(&[base.clone(), noisy]).unwrap();
        assert_eq!(out.permutations[1].mapping, vec![1, 0]);
    }

    #[test]
    fn consensus_rejects_empty_and_mismatched() {
        assert!(consensus_align(&[]).is_err());
        let a = array![[1.0], [0.0]];
        let b = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(consensus_align(&[a, b]).is_err());
    }
}
