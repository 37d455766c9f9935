//! Labeled count matrices and treatment assignments.

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// D x N matrix of nonnegative data; columns are subjects, rows are variables.
///
/// Entries may be non-integer: imputed matrices are real-valued and the KL
/// objective downstream is defined for any nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    values: Array2<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

fn check_unique(labels: &[String], axis: &'static str) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel {
                axis,
                label: l.clone(),
            });
        }
    }
    Ok(())
}

impl CountMatrix {
    pub fn new(values: Array2<f64>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let (d, n) = values.dim();
        if d == 0 || n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if row_labels.len() != d || col_labels.len() != n {
            return Err(Error::ShapeMismatch {
                context: "matrix labels",
                expected: format!("{d} row labels, {n} column labels"),
                found: format!("{}, {}", row_labels.len(), col_labels.len()),
            });
        }
        check_unique(&row_labels, "row")?;
        check_unique(&col_labels, "column")?;
        for ((r, c), &v) in values.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidEntry {
                    row: row_labels[r].clone(),
                    col: col_labels[c].clone(),
                    value: v,
                });
            }
        }
        Ok(Self {
            values,
            row_labels,
            col_labels,
        })
    }

    /// Wrap a raw array with generated labels `v0..` / `s0..`.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let (d, n) = values.dim();
        let rows = (0..d).map(|i| format!("v{i}")).collect();
        let cols = (0..n).map(|i| format!("s{i}")).collect();
        Self::new(values, rows, cols)
    }

    /// Same labels, new values of identical shape.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        Self::new(values, self.row_labels.clone(), self.col_labels.clone())
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Column totals (mutation burden per subject, in the signature setting).
    pub fn col_totals(&self) -> Vec<f64> {
        self.values.sum_axis(Axis(0)).to_vec()
    }

    /// Subset of columns by index, preserving order and labels.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        let values = self.values.select(Axis(1), idx);
        let cols = idx.iter().map(|&i| self.col_labels[i].clone()).collect();
        Self::new(values, self.row_labels.clone(), cols)
    }

    /// Columns drawn with replacement; repeated labels get an occurrence
    /// suffix so the result still has unique column labels.
    pub fn resample_columns(&self, idx: &[usize]) -> Result<Self> {
        let values = self.values.select(Axis(1), idx);
        let mut counts = std::collections::HashMap::new();
        let cols = idx
            .iter()
            .map(|&i| {
                let n = counts.entry(i).or_insert(0usize);
                let label = if *n == 0 {
                    self.col_labels[i].clone()
                } else {
                    format!("{}.{}", self.col_labels[i], n)
                };
                *n += 1;
                label
            })
            .collect();
        Self::new(values, self.row_labels.clone(), cols)
    }

    /// Error if any row or column is entirely zero, naming the offender.
    pub fn check_no_zero_slices(&self) -> Result<()> {
        for (r, row) in self.values.rows().into_iter().enumerate() {
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroRow(self.row_labels[r].clone()));
            }
        }
        for (c, col) in self.values.columns().into_iter().enumerate() {
            if col.iter().all(|&v| v == 0.0) {
                return Err(Error::ZeroColumn(self.col_labels[c].clone()));
            }
        }
        Ok(())
    }
}

/// Length-N binary treatment assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentVector {
    t: Vec<u8>,
}

impl TreatmentVector {
    pub fn new(t: Vec<u8>) -> Result<Self> {
        for (i, &v) in t.iter().enumerate() {
            if v > 1 {
                return Err(Error::InvalidTreatment {
                    subject: format!("#{i}"),
                    value: v.to_string(),
                });
            }
        }
        Ok(Self { t })
    }

    pub fn assignments(&self) -> &[u8] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.t[i] == 1
    }

    /// Number of untreated subjects.
    pub fn n0(&self) -> usize {
        self.t.iter().filter(|&&v| v == 0).count()
    }

    /// Number of treated subjects.
    pub fn n1(&self) -> usize {
        self.t.iter().filter(|&&v| v == 1).count()
    }

    pub fn treated_indices(&self) -> Vec<usize> {
        (0..self.t.len()).filter(|&i| self.t[i] == 1).collect()
    }

    pub fn untreated_indices(&self) -> Vec<usize> {
        (0..self.t.len()).filter(|&i| self.t[i] == 0).collect()
    }

    /// Error unless both arms are nonempty.
    pub fn require_both_groups(&self) -> Result<()> {
        if self.n1() == 0 {
            return Err(Error::EmptyGroup("treated"));
        }
        if self.n0() == 0 {
            return Err(Error::EmptyGroup("untreated"));
        }
        Ok(())
    }

    /// Copy with subject `i`'s assignment flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut t = self.t.clone();
        t[i] = 1 - t[i];
        Self { t }
    }

    /// Subset (or resample) following the same index list used on a matrix.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            t: idx.iter().map(|&i| self.t[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_negative_entry_with_coordinates() {
        let err = CountMatrix::new(
            array![[1.0, 2.0], [3.0, -1.0]],
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("'b'") && msg.contains("'y'"), "{msg}");
    }

    #[test]
    fn rejects_duplicate_labels() {
        let err = CountMatrix::new(
            array![[1.0], [1.0]],
            vec!["a".into(), "a".into()],
            vec!["x".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel { axis: "row", .. }));
    }

    #[test]
    fn zero_slice_check_names_offender() {
        let m = CountMatrix::new(
            array![[1.0, 0.0], [2.0, 0.0]],
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let err = m.check_no_zero_slices().unwrap_err();
        assert!(matches!(err, Error::ZeroColumn(ref c) if c == "y"));
    }

    #[test]
    fn resample_relabels_duplicates() {
        let m = CountMatrix::from_values(array![[1.0, 2.0, 3.0]]).unwrap();
        let r = m.resample_columns(&[2, 2, 0]).unwrap();
        assert_eq!(r.col_labels(), &["s2".to_string(), "s2.1".into(), "s0".into()]);
    }

    #[test]
    fn treatment_groups() {
        let t = TreatmentVector::new(vec![0, 1, 1, 0]).unwrap();
        assert_eq!((t.n0(), t.n1()), (2, 2));
        assert_eq!(t.treated_indices(), vec![1, 2]);
        assert_eq!(t.flipped(0).assignments(), &[1, 1, 1, 0]);
        assert!(TreatmentVector::new(vec![0, 2]).is_err());
    }
}
