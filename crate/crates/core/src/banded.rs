//! LU factorisation with partial pivoting for banded complex matrices.
//!
//! Row interchanges can push the upper bandwidth of `U` up to
//! `lower + upper`, so each working row stores `2·lower + upper + 1`
//! entries. Work is `O(n·lower·(lower + upper))`.

use num_complex::Complex64;

use crate::error::SolveError;
use crate::grid::BandedMatrix;

/// Pivots smaller than this fraction of the largest matrix entry are
/// treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    lower: usize,
    /// Upper bandwidth of `U` after fill-in.
    upper_fill: usize,
    /// Row `i` holds columns `i − lower ..= i + upper_fill`.
    rows: Vec<Complex64>,
    /// Multipliers of elimination step `k`, for rows `k+1 ..= k+lower`.
    multipliers: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix<Complex64>) -> Result<Self, SolveError> {
        let n = a.order();
        let lower = a.lower();
        let upper_fill = a.lower() + a.upper();
        let width = lower + upper_fill + 1;
        let mut rows = vec![Complex64::ZERO; n * width];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in a.row_span(i) {
                let v = a.get(i, j);
                scale = scale.max(v.norm());
                rows[i * width + (j + lower - i)] = v;
            }
        }
        if scale == 0.0 && n > 0 {
            return Err(SolveError::Singular { column: 0 });
        }
        let at = |i: usize, j: usize| i * width + (j + lower - i);

        let mut multipliers = vec![Complex64::ZERO; n * lower];
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + lower).min(n - 1);
            let last_col = (k + upper_fill).min(n - 1);

            let mut p = k;
            let mut best = rows[at(k, k)].norm();
            for i in k + 1..=last_row {
                let v = rows[at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > PIVOT_TOLERANCE * scale) {
                return Err(SolveError::Singular { column: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    rows.swap(at(k, j), at(p, j));
                }
            }

            let pivot = rows[at(k, k)];
            for i in k + 1..=last_row {
                let m = rows[at(i, k)] / pivot;
                multipliers[k * lower + (i - k - 1)] = m;
                rows[at(i, k)] = Complex64::ZERO;
                if m != Complex64::ZERO {
                    for j in k + 1..=last_col {
                        let u = rows[at(k, j)];
                        rows[at(i, j)] -= m * u;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            lower,
            upper_fill,
            rows,
            multipliers,
            pivots,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) -> Result<(), SolveError> {
        let n = self.n;
        if b.len() != n {
            return Err(SolveError::DimensionMismatch { order: n, len: b.len() });
        }
        let lower = self.lower;
        let width = lower + self.upper_fill + 1;
        let at = |i: usize, j: usize| i * width + (j + lower - i);

        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + lower).min(n.saturating_sub(1)) {
                b[i] -= self.multipliers[k * lower + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + self.upper_fill).min(n - 1) {
                acc -= self.rows[at(i, j)] * b[j];
            }
            b[i] = acc / self.rows[at(i, i)];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, SolveError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

/// Factor and solve in one call.
pub fn banded_solve(a: &BandedMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>, SolveError> {
    if b.len() != a.order() {
        return Err(SolveError::DimensionMismatch {
            order: a.order(),
            len: b.len(),
        });
    }
    BandedLu::factor(a)?.solve(b)
}
