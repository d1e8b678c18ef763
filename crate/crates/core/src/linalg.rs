//! Small dense linear algebra: design matrices, least squares through a
//! column-pivoted Householder QR, and centered second-moment matrices.
//!
//! Everything here is sized for regression problems with at most a few
//! hundred columns; storage is dense and row-major.

use crate::error::{Error, Result};

/// Pivots smaller than this fraction of the largest pivot mark the design as singular.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
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

    /// A matrix with no rows; used for an absent unlabeled sample.
    pub fn empty(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        let width = self.cols.max(1);
        let take = if self.cols == 0 { 0 } else { self.rows };
        self.data.chunks_exact(width).take(take)
    }

    /// Rows `0..count` as a new matrix.
    pub fn head_rows(&self, count: usize) -> Matrix {
        let count = count.min(self.rows);
        Matrix {
            rows: count,
            cols: self.cols,
            data: self.data[..count * self.cols].to_vec(),
        }
    }

    /// Column sums, accumulated in row order.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.iter_rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows as f64;
        self.column_sums().into_iter().map(|s| s / n).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                v.len()
            )));
        }
        Ok(self.iter_rows().map(|row| dot(row, v)).collect())
    }

    /// `selfᵀ v` for a vector of length `rows`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, vector has {} entries",
                self.rows,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &w) in self.iter_rows().zip(v) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        Ok(out)
    }

    /// Appends the columns of `other` to the right of `self`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Prepends the intercept column of ones.
pub fn build_design(x_rows: &Matrix) -> Matrix {
    let cols = x_rows.cols + 1;
    let mut data = Vec::with_capacity(x_rows.rows * cols);
    for i in 0..x_rows.rows {
        data.push(1.0);
        data.extend_from_slice(x_rows.row(i));
    }
    Matrix {
        rows: x_rows.rows,
        cols,
        data,
    }
}

/// Least-squares solution of `design · beta ≈ y`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// False when the smallest pivot fell under [`RANK_TOLERANCE`] times the largest;
    /// `beta` is then the basic solution on the well-determined pivots only.
    pub rank_ok: bool,
    /// Ratio of largest to smallest pivot magnitude of the triangular factor.
    pub condition_estimate: f64,
}

impl OlsSolution {
    pub fn residual_sum_of_squares(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// Column-pivoted Householder QR least squares that always returns a
/// solution and reports rank trouble through `rank_ok`.
pub fn qr_least_squares(design: &Matrix, y: &[f64]) -> Result<OlsSolution> {
    let (n, k) = (design.rows, design.cols);
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, response has {} entries",
            y.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgs("design has no columns".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} regression coefficients"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }

    // column-major working copy
    let mut a = vec![0.0; n * k];
    for i in 0..n {
        for j in 0..k {
            a[j * n + i] = design.data[i * k + j];
        }
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut qty = y.to_vec();
    let mut norms: Vec<f64> = (0..k)
        .map(|j| a[j * n..(j + 1) * n].iter().map(|v| v * v).sum())
        .collect();

    for j in 0..k {
        let pivot = (j..k)
            .max_by(|&p, &q| norms[p].total_cmp(&norms[q]))
            .unwrap_or(j);
        if pivot != j {
            for i in 0..n {
                a.swap(j * n + i, pivot * n + i);
            }
            norms.swap(j, pivot);
            perm.swap(j, pivot);
        }

        let col = &mut a[j * n + j..(j + 1) * n];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        col[0] -= alpha;
        let v: Vec<f64> = col.to_vec();
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        col[0] = alpha;
        for x in col.iter_mut().skip(1) {
            *x = 0.0;
        }
        if vnorm2 == 0.0 {
            continue;
        }

        for c in j + 1..k {
            let target = &mut a[c * n + j..(c + 1) * n];
            let s = 2.0 * dot(&v, target) / vnorm2;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= s * vi;
            }
            norms[c] = target[1..].iter().map(|x| x * x).sum();
        }
        let target = &mut qty[j..];
        let s = 2.0 * dot(&v, target) / vnorm2;
        for (t, vi) in target.iter_mut().zip(&v) {
            *t -= s * vi;
        }
    }

    let diag: Vec<f64> = (0..k).map(|j| a[j * n + j].abs()).collect();
    let largest = diag[0];
    let smallest = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let condition_estimate = if smallest > 0.0 {
        largest / smallest
    } else {
        f64::INFINITY
    };
    let tol = RANK_TOLERANCE * largest;
    let rank = diag.iter().take_while(|&&d| d > tol && d > 0.0).count();
    let rank_ok = rank == k;

    // back substitution on the leading rank x rank block
    let mut z = vec![0.0; k];
    for i in (0..rank).rev() {
        let mut acc = qty[i];
        for c in i + 1..rank {
            acc -= a[c * n + i] * z[c];
        }
        z[i] = acc / a[i * n + i];
    }
    let mut beta = vec![0.0; k];
    for (j, &p) in perm.iter().enumerate() {
        beta[p] = z[j];
    }

    let fitted = design.mul_vec(&beta)?;
    let residuals = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    Ok(OlsSolution {
        beta,
        residuals,
        rank_ok,
        condition_estimate,
    })
}

/// Ordinary least squares; a numerically singular design is an error.
pub fn ols_solve(design: &Matrix, y: &[f64]) -> Result<OlsSolution> {
    let sol = qr_least_squares(design, y)?;
    if !sol.rank_ok {
        return Err(Error::RankDeficient {
            condition: sol.condition_estimate,
        });
    }
    Ok(sol)
}

/// Accumulates `Σₖ (xₖ − center)(xₖ − center)ᵀ` into `acc` (p×p, row-major).
pub(crate) fn add_scatter(acc: &mut [f64], x_rows: &Matrix, center: &[f64]) {
    let p = center.len();
    let mut d = vec![0.0; p];
    for row in x_rows.iter_rows() {
        for ((di, xi), ci) in d.iter_mut().zip(row).zip(center) {
            *di = xi - ci;
        }
        for i in 0..p {
            for j in i..p {
                acc[i * p + j] += d[i] * d[j];
            }
        }
    }
}

/// Completes the upper triangle of an accumulated scatter into a full symmetric matrix.
pub(crate) fn symmetrize_upper(acc: &mut [f64], p: usize) {
    for i in 0..p {
        for j in 0..i {
            acc[i * p + j] = acc[j * p + i];
        }
    }
}

/// `(1/n) Σₖ (xₖ − center)(xₖ − center)ᵀ`.
pub fn sample_cov(x_rows: &Matrix, center: &[f64]) -> Result<Matrix> {
    if center.len() != x_rows.cols {
        return Err(Error::DimensionMismatch(format!(
            "center has {} entries for {} columns",
            center.len(),
            x_rows.cols
        )));
    }
    if x_rows.rows == 0 {
        return Err(Error::InsufficientData("no rows".into()));
    }
    let p = x_rows.cols;
    let mut acc = vec![0.0; p * p];
    add_scatter(&mut acc, x_rows, center);
    symmetrize_upper(&mut acc, p);
    let n = x_rows.rows as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    Matrix::new(p, p, acc)
}

/// `vᵀ M v` for a square `M`.
pub fn quad_form(m: &Matrix, v: &[f64]) -> Result<f64> {
    if m.rows != m.cols || m.cols != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix against vector of length {}",
            m.rows,
            m.cols,
            v.len()
        )));
    }
    Ok(m.iter_rows().zip(v).map(|(row, vi)| vi * dot(row, v)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Normal equations with an explicit Gauss-Jordan inverse.
    fn brute_force_ols(design: &Matrix, y: &[f64]) -> Vec<f64> {
        let k = design.cols();
        let mut gram = vec![vec![0.0; k]; k];
        let mut xty = vec![0.0; k];
        for (i, row) in design.iter_rows().enumerate() {
            for a in 0..k {
                xty[a] += row[a] * y[i];
                for b in 0..k {
                    gram[a][b] += row[a] * row[b];
                }
            }
        }
        let mut inv = vec![vec![0.0; k]; k];
        for (i, r) in inv.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        for c in 0..k {
            let piv = (c..k)
                .max_by(|&i, &j| gram[i][c].abs().total_cmp(&gram[j][c].abs()))
                .unwrap();
            gram.swap(c, piv);
            inv.swap(c, piv);
            let d = gram[c][c];
            for j in 0..k {
                gram[c][j] /= d;
                inv[c][j] /= d;
            }
            for r in 0..k {
                if r != c {
                    let f = gram[r][c];
                    for j in 0..k {
                        gram[r][j] -= f * gram[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
        (0..k)
            .map(|i| (0..k).map(|j| inv[i][j] * xty[j]).sum())
            .collect()
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Matrix, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        (build_design(&Matrix::from_rows(&x).unwrap()), y)
    }

    #[test]
    fn design_prepends_intercept() {
        let d = build_design(&Matrix::from_rows(&[[5.0]]).unwrap());
        assert_eq!(d, Matrix::from_rows(&[[1.0, 5.0]]).unwrap());
        let d = build_design(&Matrix::column(&[0.0, 1.0, 2.0]).unwrap());
        assert_eq!(
            d,
            Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).unwrap()
        );
        let d = build_design(&Matrix::from_rows(&[[1.5, -2.0], [3.0, 4.0]]).unwrap());
        assert_eq!(
            d,
            Matrix::from_rows(&[[1.0, 1.5, -2.0], [1.0, 3.0, 4.0]]).unwrap()
        );
    }

    #[test]
    fn ols_collinear_points() {
        let design = build_design(&Matrix::column(&[0.0, 1.0, 2.0]).unwrap());
        let sol = ols_solve(&design, &[1.0, 2.0, 3.0]).unwrap();
        assert!((sol.beta[0] - 1.0).abs() < 1e-12);
        assert!((sol.beta[1] - 1.0).abs() < 1e-12);
        assert!(sol.residuals.iter().all(|r| r.abs() < 1e-12));
        assert!(sol.rank_ok);
    }

    #[test]
    fn ols_constant_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (design, _) = random_problem(&mut rng, 12, 3);
        let sol = ols_solve(&design, &[4.25; 12]).unwrap();
        assert!((sol.beta[0] - 4.25).abs() < 1e-12);
        assert!(sol.beta[1..].iter().all(|b| b.abs() < 1e-12));
        assert!(sol.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn ols_matches_brute_force_20x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let (design, y) = random_problem(&mut rng, 20, 3);
        let sol = ols_solve(&design, &y).unwrap();
        let oracle = brute_force_ols(&design, &y);
        for (a, b) in sol.beta.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn ols_agrees_with_normal_equations_on_200_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        for _ in 0..200 {
            let p = rng.random_range(1..=8);
            let n = rng.random_range(p + 2..=50);
            let (design, y) = random_problem(&mut rng, n, p);
            let sol = ols_solve(&design, &y).unwrap();
            let oracle = brute_force_ols(&design, &y);
            let scale = oracle.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in sol.beta.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let design = Matrix::from_rows(&[
            [1.0, 2.0, 2.0],
            [1.0, 3.0, 3.0],
            [1.0, 5.0, 5.0],
            [1.0, 7.0, 7.0],
        ])
        .unwrap();
        let sol = qr_least_squares(&design, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(!sol.rank_ok);
        match ols_solve(&design, &[1.0, 2.0, 3.0, 4.0]) {
            Err(Error::RankDeficient { condition }) => assert!(condition > 1e10),
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn dimension_errors() {
        let design = build_design(&Matrix::column(&[0.0, 1.0, 2.0]).unwrap());
        assert!(matches!(
            ols_solve(&design, &[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            sample_cov(&design, &[0.0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn sample_cov_examples() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let c = sample_cov(&x, &[1.0, 2.0]).unwrap();
        assert!(c.as_slice().iter().all(|&v| v == 0.0));

        let c = sample_cov(&Matrix::column(&[0.0, 2.0]).unwrap(), &[1.0]).unwrap();
        assert_eq!(c.as_slice(), &[1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..5)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let center = [0.3, -0.1];
        let c = sample_cov(&x, &center).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for r in &rows {
                    s += (r[i] - center[i]) * (r[j] - center[j]);
                }
                assert!((c.get(i, j) - s / 5.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residuals_are_orthogonal_to_design(seed in any::<u64>(), p in 1usize..6, extra in 1usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (design, y) = random_problem(&mut rng, p + 1 + extra, p);
            let sol = ols_solve(&design, &y).unwrap();
            let xtr = design.tr_mul_vec(&sol.residuals).unwrap();
            let xty = design.tr_mul_vec(&y).unwrap();
            let bound = 1e-8 * xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(xtr.iter().all(|v| v.abs() <= bound));
        }

        #[test]
        fn exact_fit_has_vanishing_residuals(seed in any::<u64>(), p in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (design, _) = random_problem(&mut rng, 3 * p + 4, p);
            let coef: Vec<f64> = (0..=p).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y = design.mul_vec(&coef).unwrap();
            let sol = ols_solve(&design, &y).unwrap();
            prop_assert!(sol.residuals.iter().all(|r| r.abs() <= 1e-10));
        }
    }
}
