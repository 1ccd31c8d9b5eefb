//! Small dense complex least-squares solves.
//!
//! Systems here are at most a handful of unknowns, so the normal equations
//! are formed explicitly and factored with a Hermitian Cholesky. Blocks whose
//! Gram matrix is numerically singular fall back to an SVD minimum-norm
//! solution of the (ridge-augmented) design matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative pivot floor below which the Cholesky factorisation is rejected.
const PIVOT_TOL: f64 = 1e-12;

/// Relative singular value cutoff for the minimum-norm fallback.
const SVD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    MinimumNorm,
    /// All-zero design matrix; the solution is zero.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub coefficients: Vec<Complex64>,
    pub method: SolveMethod,
    /// Ratio of the largest to smallest squared Cholesky pivot; infinite when
    /// the factorisation was rejected and zero for degenerate systems.
    pub pivot_ratio: f64,
    /// Effective ridge added to the Gram diagonal.
    pub ridge: f64,
}

/// Row-major `rows x cols` complex design matrix.
#[derive(Debug, Clone)]
pub struct Design<'a> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [Complex64],
}

impl Design<'_> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }
}

/// Hermitian Gram matrix `AᴴA` (row-major) and right-hand side `Aᴴb`.
fn normal_equations(a: &Design<'_>, b: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = a.cols;
    let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for (row, &y) in a.data.chunks_exact(n).zip(b).take(a.rows) {
        for i in 0..n {
            let ci = row[i].conj();
            rhs[i] += ci * y;
            for j in i..n {
                gram[i * n + j] += ci * row[j];
            }
        }
    }
    for i in 0..n {
        gram[i * n + i].im = 0.0;
        for j in 0..i {
            gram[i * n + j] = gram[j * n + i].conj();
        }
    }
    (gram, rhs)
}

/// In-place lower Cholesky of a Hermitian matrix. Returns the squared pivots,
/// or `None` when a pivot falls below `PIVOT_TOL * max_diag`.
fn cholesky(m: &mut [Complex64], n: usize) -> Option<Vec<f64>> {
    let max_diag = (0..n).map(|i| m[i * n + i].re).fold(0.0_f64, f64::max);
    let floor = PIVOT_TOL * max_diag;
    let mut pivots = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = m[j * n + j].re;
        for k in 0..j {
            d -= m[j * n + k].norm_sqr();
        }
        if d.is_nan() || d <= floor {
            return None;
        }
        pivots.push(d);
        let ljj = d.sqrt();
        m[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k].conj();
            }
            m[i * n + j] = s / ljj;
        }
    }
    Some(pivots)
}

/// Solves `L Lᴴ x = b` given the lower factor in `l`.
fn cholesky_solve(l: &[Complex64], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * y[k];
        }
        y[i] = s / l[i * n + i].re;
    }
    y
}

fn minimum_norm(a: &Design<'_>, b: &[Complex64], ridge: f64) -> Vec<Complex64> {
    let extra = if ridge > 0.0 { a.cols } else { 0 };
    let rows = a.rows + extra;
    let sr = ridge.sqrt();
    let mat = DMatrix::from_fn(rows, a.cols, |r, c| {
        if r < a.rows {
            a.at(r, c)
        } else if r - a.rows == c {
            Complex64::new(sr, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rhs = DVector::from_fn(rows, |r, _| if r < a.rows { b[r] } else { Complex64::new(0.0, 0.0) });
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    match svd.solve(&rhs, smax * SVD_TOL) {
        Ok(x) => x.iter().cloned().collect(),
        Err(_) => vec![Complex64::new(0.0, 0.0); a.cols],
    }
}

/// Minimises `Σ_r |a_r · w − b_r|² + ridge_eff · |w|²` where
/// `ridge_eff = ridge_scale · trace(AᴴA) / cols`.
pub fn solve_ridge(a: &Design<'_>, b: &[Complex64], ridge_scale: f64) -> RidgeSolution {
    assert_eq!(a.data.len(), a.rows * a.cols);
    assert_eq!(b.len(), a.rows);
    let n = a.cols;
    let (mut gram, rhs) = normal_equations(a, b);
    let trace: f64 = (0..n).map(|i| gram[i * n + i].re).sum();
    if trace.is_nan() || trace <= 0.0 {
        return RidgeSolution {
            coefficients: vec![Complex64::new(0.0, 0.0); n],
            method: SolveMethod::Degenerate,
            pivot_ratio: 0.0,
            ridge: 0.0,
        };
    }
    let ridge = ridge_scale * trace / n as f64;
    for i in 0..n {
        gram[i * n + i].re += ridge;
    }
    match cholesky(&mut gram, n) {
        Some(pivots) => {
            let max = pivots.iter().cloned().fold(0.0, f64::max);
            let min = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
            RidgeSolution {
                coefficients: cholesky_solve(&gram, n, &rhs),
                method: SolveMethod::Cholesky,
                pivot_ratio: max / min,
                ridge,
            }
        }
        None => RidgeSolution {
            coefficients: minimum_norm(a, b, ridge),
            method: SolveMethod::MinimumNorm,
            pivot_ratio: f64::INFINITY,
            ridge,
        },
    }
}

/// `Σ_r |a_r · w − b_r|²`.
pub fn residual_energy(a: &Design<'_>, b: &[Complex64], w: &[Complex64]) -> f64 {
    (0..a.rows)
        .map(|r| {
            let row = &a.data[r * a.cols..(r + 1) * a.cols];
            let pred: Complex64 = row.iter().zip(w).map(|(x, c)| x * c).sum();
            (pred - b[r]).norm_sqr()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn recovers_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (rows, cols) = (40, 5);
        let a = random(&mut rng, rows * cols);
        let w = random(&mut rng, cols);
        let design = Design { rows, cols, data: &a };
        let b: Vec<_> = (0..rows)
            .map(|r| (0..cols).map(|k| a[r * cols + k] * w[k]).sum())
            .collect();
        let sol = solve_ridge(&design, &b, 0.0);
        assert_eq!(sol.method, SolveMethod::Cholesky);
        for (x, y) in sol.coefficients.iter().zip(&w) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!(residual_energy(&design, &b, &sol.coefficients) < 1e-24);
    }

    #[test]
    fn normal_equation_residual_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (rows, cols) = (30, 4);
        let a = random(&mut rng, rows * cols);
        let b = random(&mut rng, rows);
        let design = Design { rows, cols, data: &a };
        let sol = solve_ridge(&design, &b, 0.0);
        for k in 0..cols {
            let dot: Complex64 = (0..rows)
                .map(|r| {
                    let pred: Complex64 = (0..cols).map(|j| a[r * cols + j] * sol.coefficients[j]).sum();
                    a[r * cols + k].conj() * (b[r] - pred)
                })
                .sum();
            assert!(dot.norm() < 1e-12);
        }
    }

    #[test]
    fn zero_design_is_degenerate() {
        let a = vec![c(0.0, 0.0); 12];
        let b = vec![c(1.0, 0.0); 4];
        let sol = solve_ridge(
            &Design {
                rows: 4,
                cols: 3,
                data: &a,
            },
            &b,
            0.0,
        );
        assert_eq!(sol.method, SolveMethod::Degenerate);
        assert!(sol.coefficients.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn singular_design_falls_back_to_minimum_norm() {
        // Second column duplicates the first; third is zero.
        let rows = 6;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in 0..rows {
            let x = c(r as f64 + 1.0, 0.5 * r as f64);
            a.extend_from_slice(&[x, x, c(0.0, 0.0)]);
            b.push(x * c(2.0, 0.0));
        }
        let sol = solve_ridge(
            &Design {
                rows,
                cols: 3,
                data: &a,
            },
            &b,
            0.0,
        );
        assert_eq!(sol.method, SolveMethod::MinimumNorm);
        // Minimum-norm splits the weight evenly between the duplicates.
        assert!((sol.coefficients[0] - c(1.0, 0.0)).norm() < 1e-10);
        assert!((sol.coefficients[1] - c(1.0, 0.0)).norm() < 1e-10);
        assert!(sol.coefficients[2].norm() < 1e-10);
    }

    #[test]
    fn ridge_shrinks_toward_unregularised() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (rows, cols) = (50, 4);
        let a = random(&mut rng, rows * cols);
        let b = random(&mut rng, rows);
        let design = Design { rows, cols, data: &a };
        let exact = solve_ridge(&design, &b, 0.0).coefficients;
        let dist = |lam: f64| {
            let w = solve_ridge(&design, &b, lam).coefficients;
            w.iter()
                .zip(&exact)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let d = [dist(1e-2), dist(1e-6), dist(1e-12)];
        assert!(d[0] > d[1] && d[1] > d[2]);
        assert!(d[2] < 1e-10);
    }
}
