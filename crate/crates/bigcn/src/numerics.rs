//! Dense and sparse matrix types plus the small set of numeric kernels the
//! rest of the crate is built on.
//!
//! Everything is 64-bit floating point, row-major, and pure: the same inputs
//! always produce bit-identical outputs. Sparse matrices keep their entries
//! in canonical (row, col) order so equality is structural.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error(
        "{op}: shape mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}"
    )]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("{op}: dimensions {rows}x{cols} do not match data length {len}")]
    BadDimensions {
        op: &'static str,
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("{op}: input must not be empty")]
    EmptyInput { op: &'static str },
    #[error("sparse entry ({row}, {col}) out of bounds for {rows}x{cols} matrix")]
    EntryOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate sparse entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::BadDimensions {
                op: "DenseMatrix::new",
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from nested rows; handy in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    /// Elementwise product; shapes must match.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
        self.check_same_shape("hadamard", other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
        self.check_same_shape("add", other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<(), NumericsError> {
        self.check_same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Sum of squares over all entries; the L2 penalty building block.
    pub fn sum_of_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Slice of columns `[from, to)` as a new matrix.
    pub fn col_slice(&self, from: usize, to: usize) -> DenseMatrix {
        assert!(from <= to && to <= self.cols);
        let cols = to - from;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(&self.data[r * self.cols + from..r * self.cols + to]);
        }
        DenseMatrix {
            rows: self.rows,
            cols,
            data,
        }
    }

    fn check_same_shape(&self, op: &'static str, other: &DenseMatrix) -> Result<(), NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::ShapeMismatch {
                op,
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        Ok(())
    }
}

/// Sparse matrix stored as canonically sorted (row, col, value) triplets with
/// a compressed row lookup. No duplicate coordinates, indices always in range.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
}

impl SparseMatrix {
    pub fn from_entries(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self, NumericsError> {
        for &(r, c, _) in &entries {
            if r >= rows || c >= cols {
                return Err(NumericsError::EntryOutOfBounds {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
        }
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(NumericsError::DuplicateEntry {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        Ok(Self::from_sorted(rows, cols, entries))
    }

    // Assumes entries sorted, deduplicated, in range.
    fn from_sorted(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            entries,
            row_ptr,
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_sorted(n, n, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn row_entries(&self, r: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn transpose(&self) -> SparseMatrix {
        let entries = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        // Re-sorts into canonical order.
        SparseMatrix::from_entries(self.cols, self.rows, entries)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn densify(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            out.set(r, c, v);
        }
        out
    }

    /// Keep only entries the predicate accepts, preserving values.
    pub fn filter_entries(
        &self,
        keep: impl Fn(usize, &(usize, usize, f64)) -> bool,
    ) -> SparseMatrix {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, e)| keep(*i, e))
            .map(|(_, e)| *e)
            .collect();
        SparseMatrix::from_sorted(self.rows, self.cols, entries)
    }
}

/// Sparse-dense product `a * b`.
pub fn spmm(a: &SparseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if a.cols != b.rows {
        return Err(NumericsError::ShapeMismatch {
            op: "spmm",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    let k = b.cols;
    for &(r, c, v) in &a.entries {
        let src = &b.data[c * k..(c + 1) * k];
        let dst = &mut out.data[r * k..(r + 1) * k];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += v * s;
        }
    }
    Ok(out)
}

/// Dense product `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if a.cols != b.rows {
        return Err(NumericsError::ShapeMismatch {
            op: "matmul",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    let n = b.cols;
    for r in 0..a.rows {
        for (i, &av) in a.row(r).iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[i * n..(i + 1) * n];
            let orow = &mut out.data[r * n..(r + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// Elementwise `max(0, x)`.
pub fn relu(m: &DenseMatrix) -> DenseMatrix {
    m.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Numerically stable softmax over a single-row matrix.
pub fn softmax_row(v: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if v.rows != 1 {
        return Err(NumericsError::BadDimensions {
            op: "softmax_row",
            rows: v.rows,
            cols: v.cols,
            len: v.data.len(),
        });
    }
    if v.cols == 0 {
        return Err(NumericsError::EmptyInput { op: "softmax_row" });
    }
    let max = v.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.data.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    DenseMatrix::new(1, v.cols, exps.into_iter().map(|e| e / sum).collect())
}

/// Column means as a `1 x cols` matrix.
pub fn mean_rows(m: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if m.rows == 0 {
        return Err(NumericsError::EmptyInput { op: "mean_rows" });
    }
    let mut out = vec![0.0; m.cols];
    for r in 0..m.rows {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    let inv = 1.0 / m.rows as f64;
    for o in &mut out {
        *o *= inv;
    }
    DenseMatrix::new(1, m.cols, out)
}

/// Column-wise concatenation, `a`'s columns first.
pub fn concat_cols(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if a.rows != b.rows {
        return Err(NumericsError::ShapeMismatch {
            op: "concat_cols",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let cols = a.cols + b.cols;
    let mut data = Vec::with_capacity(a.rows * cols);
    for r in 0..a.rows {
        data.extend_from_slice(a.row(r));
        data.extend_from_slice(b.row(r));
    }
    Ok(DenseMatrix {
        rows: a.rows,
        cols,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn spmm_identity_passes_through() {
        let a = SparseMatrix::identity(2);
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(spmm(&a, &b).unwrap(), b);
    }

    #[test]
    fn spmm_zero_matrix_gives_zeros() {
        let a = SparseMatrix::empty(3, 3);
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(spmm(&a, &b).unwrap(), DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn spmm_two_node_chain_normalized() {
        // A_hat of the 2-node chain times I_2 reproduces A_hat itself.
        let a = SparseMatrix::from_entries(2, 2, vec![(0, 0, 1.0), (1, 0, SQRT_HALF), (1, 1, 0.5)])
            .unwrap();
        let x = DenseMatrix::identity(2);
        let got = spmm(&a, &x).unwrap();
        let want = DenseMatrix::from_rows(&[&[1.0, 0.0], &[SQRT_HALF, 0.5]]);
        assert_eq!(got, want);
    }

    #[test]
    fn spmm_shape_mismatch_errors() {
        let a = SparseMatrix::identity(2);
        let b = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            spmm(&a, &b),
            Err(NumericsError::ShapeMismatch { op: "spmm", .. })
        ));
    }

    #[test]
    fn matmul_hand_example() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0]]);
        let b = DenseMatrix::from_rows(&[&[3.0], &[4.0]]);
        assert_eq!(matmul(&a, &b).unwrap(), DenseMatrix::from_rows(&[&[11.0]]));
    }

    #[test]
    fn matmul_identity_and_shapes() {
        let a = DenseMatrix::from_rows(&[&[1.0, -2.0, 0.5], &[0.0, 3.0, 1.0]]);
        assert_eq!(matmul(&a, &DenseMatrix::identity(3)).unwrap(), a);
        let b = DenseMatrix::zeros(3, 4);
        let c = matmul(&a, &b).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 4));
        assert!(matmul(&b, &a).is_err());
    }

    #[test]
    fn relu_splits_signs_and_is_idempotent() {
        let m = DenseMatrix::from_rows(&[&[-1.0, 2.0]]);
        assert_eq!(relu(&m), DenseMatrix::from_rows(&[&[0.0, 2.0]]));
        let r = relu(&m);
        assert_eq!(relu(&r), r);
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let s = softmax_row(&DenseMatrix::from_rows(&[&[0.0, 0.0]])).unwrap();
        assert_eq!(s, DenseMatrix::from_rows(&[&[0.5, 0.5]]));

        let s = softmax_row(&DenseMatrix::from_rows(&[&[1000.0, 0.0]])).unwrap();
        assert!(s.data().iter().all(|v| v.is_finite()));
        assert!(s.get(0, 0) > 1.0 - 1e-12);
        assert!(s.get(0, 1) < 1e-12);
    }

    #[test]
    fn softmax_closed_form() {
        let logits = DenseMatrix::from_rows(&[&[1.0f64.ln(), 2.0f64.ln(), 3.0f64.ln()]]);
        let s = softmax_row(&logits).unwrap();
        for (got, want) in s.data().iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn mean_rows_basics() {
        let single = DenseMatrix::from_rows(&[&[3.0, 7.0]]);
        assert_eq!(mean_rows(&single).unwrap(), single);

        let m = DenseMatrix::from_rows(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert_eq!(
            mean_rows(&m).unwrap(),
            DenseMatrix::from_rows(&[&[1.0, 1.0]])
        );

        assert!(matches!(
            mean_rows(&DenseMatrix::zeros(0, 3)),
            Err(NumericsError::EmptyInput { .. })
        ));
    }

    #[test]
    fn concat_cols_basics() {
        let a = DenseMatrix::from_rows(&[&[1.0], &[2.0]]);
        let b = DenseMatrix::from_rows(&[&[3.0], &[4.0]]);
        let c = concat_cols(&a, &b).unwrap();
        assert_eq!(c, DenseMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));

        let empty = DenseMatrix::zeros(2, 0);
        assert_eq!(concat_cols(&a, &empty).unwrap(), a);

        let tall = DenseMatrix::zeros(3, 1);
        assert!(concat_cols(&a, &tall).is_err());
    }

    #[test]
    fn sparse_rejects_bad_entries() {
        assert!(matches!(
            SparseMatrix::from_entries(2, 2, vec![(2, 0, 1.0)]),
            Err(NumericsError::EntryOutOfBounds { .. })
        ));
        assert!(matches!(
            SparseMatrix::from_entries(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0)]),
            Err(NumericsError::DuplicateEntry { row: 0, col: 1 })
        ));
    }

    #[test]
    fn sparse_canonical_order_makes_equality_structural() {
        let a = SparseMatrix::from_entries(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0)]).unwrap();
        let b = SparseMatrix::from_entries(2, 2, vec![(0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries(), &[(0, 1, 2.0), (1, 0, 1.0)]);
    }

    #[test]
    fn transpose_round_trips() {
        let a = SparseMatrix::from_entries(2, 3, vec![(0, 2, 5.0), (1, 0, -1.0)]).unwrap();
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().densify(), a.densify().transpose());
    }

    fn arb_dense(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-10.0f64..10.0, rows * cols)
            .prop_map(move |data| DenseMatrix::new(rows, cols, data).unwrap())
    }

    fn arb_sparse(rows: usize, cols: usize) -> impl Strategy<Value = SparseMatrix> {
        proptest::collection::btree_map((0..rows, 0..cols), -10.0f64..10.0, 0..rows * cols)
            .prop_map(move |map| {
                let entries = map.into_iter().map(|((r, c), v)| (r, c, v)).collect();
                SparseMatrix::from_entries(rows, cols, entries).unwrap()
            })
    }

    proptest! {
        // Brute-force oracle: spmm must agree with densified matmul.
        #[test]
        fn spmm_matches_dense_oracle(a in arb_sparse(5, 4), b in arb_dense(4, 3)) {
            let fast = spmm(&a, &b).unwrap();
            let slow = matmul(&a.densify(), &b).unwrap();
            for (x, y) in fast.data().iter().zip(slow.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            logits in proptest::collection::vec(-30.0f64..30.0, 1..6),
            shift in -50.0f64..50.0,
        ) {
            let n = logits.len();
            let m = DenseMatrix::new(1, n, logits.clone()).unwrap();
            let s = softmax_row(&m).unwrap();
            let total: f64 = s.data().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(s.data().iter().all(|&v| v >= 0.0));

            let shifted = DenseMatrix::new(1, n, logits.iter().map(|x| x + shift).collect()).unwrap();
            let s2 = softmax_row(&shifted).unwrap();
            for (a, b) in s.data().iter().zip(s2.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn mean_rows_permutation_invariant(m in arb_dense(6, 3), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut order: Vec<usize> = (0..m.rows()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut permuted = DenseMatrix::zeros(m.rows(), m.cols());
            for (dst, &src) in order.iter().enumerate() {
                for c in 0..m.cols() {
                    permuted.set(dst, c, m.get(src, c));
                }
            }
            let a = mean_rows(&m).unwrap();
            let b = mean_rows(&permuted).unwrap();
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
