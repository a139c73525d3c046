//! Uniform grid on `[0, 1]`, the constrained space of grid functions that
//! vanish at nodes `0`, `M−1` and `M`, and the difference operators.
//!
//! Stencils are truncated at the ends of the grid: values outside
//! `0..=M` are taken as zero.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::GridError;

/// Smallest grid with a free node on each side of the pentadiagonal band.
pub const MIN_INTERVALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    m: usize,
    dx: f64,
}

impl GridSpec {
    pub fn new(m: usize) -> Result<Self, GridError> {
        if m < MIN_INTERVALS {
            return Err(GridError::TooFewIntervals { m, min: MIN_INTERVALS });
        }
        Ok(GridSpec { m, dx: 1.0 / m as f64 })
    }

    /// Number of intervals.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Number of nodes, `M + 1`.
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.m + 1).map(move |j| j as f64 * self.dx)
    }

    /// Indices pinned to zero.
    pub fn pinned(&self) -> [usize; 3] {
        [0, self.m - 1, self.m]
    }
}

/// Grid function with `u_0 = u_{M−1} = u_M = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<Complex64>,
}

impl StateVector {
    /// Takes `values` and zeroes the three pinned entries.
    pub fn project(mut values: Vec<Complex64>) -> Result<Self, GridError> {
        let n = values.len();
        if n < MIN_INTERVALS + 1 {
            return Err(GridError::TooFewIntervals {
                m: n.saturating_sub(1),
                min: MIN_INTERVALS,
            });
        }
        values[0] = Complex64::ZERO;
        values[n - 2] = Complex64::ZERO;
        values[n - 1] = Complex64::ZERO;
        Ok(StateVector { values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        StateVector {
            values: vec![Complex64::ZERO; grid.len()],
        }
    }

    /// Samples `f` at the nodes and projects.
    pub fn sample(grid: &GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().map(f).collect();
        StateVector::project(values).expect("grid has enough nodes")
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, grid: &GridSpec) -> Result<(), GridError> {
        if self.values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn is_in_space(&self) -> bool {
        let n = self.values.len();
        n >= 3 && self.values[0] == Complex64::ZERO && self.values[n - 2] == Complex64::ZERO && self.values[n - 1] == Complex64::ZERO
    }
}

/// `[D⁺u]_j = (u_{j+1} − u_j)/dx`
pub fn forward_difference(u: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = u.len();
    (0..n)
        .map(|j| {
            let next = if j + 1 < n { u[j + 1] } else { Complex64::ZERO };
            (next - u[j]) / dx
        })
        .collect()
}

/// `[D⁻u]_j = (u_j − u_{j−1})/dx`
pub fn backward_difference(u: &[Complex64], dx: f64) -> Vec<Complex64> {
    (0..u.len())
        .map(|j| {
            let prev = if j > 0 { u[j - 1] } else { Complex64::ZERO };
            (u[j] - prev) / dx
        })
        .collect()
}

/// `½(D⁺ + D⁻)u`, the central first difference.
pub fn central_difference(u: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = u.len();
    let scale = 0.5 / dx;
    (0..n)
        .map(|j| {
            let next = if j + 1 < n { u[j + 1] } else { Complex64::ZERO };
            let prev = if j > 0 { u[j - 1] } else { Complex64::ZERO };
            (next - prev) * scale
        })
        .collect()
}

/// Square banded matrix, stored row by row over the band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix<T> {
    order: usize,
    lower: usize,
    upper: usize,
    data: Vec<T>,
}

impl<T: Copy + Zero> BandedMatrix<T> {
    pub fn zeros(order: usize, lower: usize, upper: usize) -> Self {
        BandedMatrix {
            order,
            lower,
            upper,
            data: vec![T::zero(); order * (lower + upper + 1)],
        }
    }

    /// Toeplitz matrix with `stencil[k]` on diagonal `k − lower`; entries
    /// that fall outside the matrix are dropped.
    pub fn toeplitz(order: usize, lower: usize, stencil: &[T]) -> Self {
        assert!(stencil.len() > lower, "stencil shorter than lower bandwidth");
        let upper = stencil.len() - 1 - lower;
        let mut m = BandedMatrix::zeros(order, lower, upper);
        for i in 0..order {
            for (k, &s) in stencil.iter().enumerate() {
                let j = i as isize + k as isize - lower as isize;
                if j >= 0 && (j as usize) < order {
                    m.set(i, j as usize, s);
                }
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.order && j < self.order && j + self.lower >= i && j <= i + self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[i * self.width() + (j + self.lower - i)]
        } else {
            T::zero()
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "({i}, {j}) outside the band");
        let w = self.width();
        self.data[i * w + (j + self.lower - i)] = value;
    }

    /// Column range of row `i` inside the band.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.order)
    }

    pub fn map<U: Copy + Zero>(&self, f: impl Fn(T) -> U) -> BandedMatrix<U> {
        BandedMatrix {
            order: self.order,
            lower: self.lower,
            upper: self.upper,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `y = A x`
    pub fn matvec<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Copy + Zero + Add<Output = V> + Mul<T, Output = V>,
    {
        assert_eq!(x.len(), self.order, "vector length does not match matrix order");
        (0..self.order)
            .map(|i| {
                self.row_span(i)
                    .fold(V::zero(), |acc, j| acc + x[j] * self.get(i, j))
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// The three difference matrices on a grid, built once.
#[derive(Debug, Clone)]
pub struct DifferenceOperators {
    pub first: BandedMatrix<f64>,
    pub second: BandedMatrix<f64>,
    pub third: BandedMatrix<f64>,
}

impl DifferenceOperators {
    pub fn new(grid: &GridSpec) -> Self {
        DifferenceOperators {
            first: first_derivative(grid),
            second: second_derivative(grid),
            third: third_derivative(grid),
        }
    }
}

/// Central first difference, rows `(−1, 0, 1)/(2dx)`.
pub fn first_derivative(grid: &GridSpec) -> BandedMatrix<f64> {
    let h = 0.5 / grid.dx();
    BandedMatrix::toeplitz(grid.len(), 1, &[-h, 0.0, h])
}

/// `D⁺D⁻`, rows `(1, −2, 1)/dx²`.
pub fn second_derivative(grid: &GridSpec) -> BandedMatrix<f64> {
    let h = 1.0 / (grid.dx() * grid.dx());
    BandedMatrix::toeplitz(grid.len(), 1, &[h, -2.0 * h, h])
}

/// `D D⁺ D⁻`, rows `(−½, 1, 0, −1, ½)/dx³`.
pub fn third_derivative(grid: &GridSpec) -> BandedMatrix<f64> {
    let h = 1.0 / (grid.dx() * grid.dx() * grid.dx());
    BandedMatrix::toeplitz(grid.len(), 2, &[-0.5 * h, h, 0.0, -h, 0.5 * h])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_rejects_tiny_m() {
        assert_eq!(GridSpec::new(3), Err(GridError::TooFewIntervals { m: 3, min: 4 }));
        assert_eq!(GridSpec::new(4).unwrap().pinned(), [0, 3, 4]);
        let g = GridSpec::new(8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.pinned(), [0, 7, 8]);
    }

    #[test]
    fn projection_pins_three_nodes() {
        let g = GridSpec::new(10).unwrap();
        let u = StateVector::sample(&g, |_| Complex64::new(1.0, 2.0));
        assert!(u.is_in_space());
        let v = u.values();
        assert_eq!(v[0], Complex64::ZERO);
        assert_eq!(v[9], Complex64::ZERO);
        assert_eq!(v[10], Complex64::ZERO);
        assert_eq!(v[8], Complex64::new(1.0, 2.0));
    }

    #[test]
    fn one_sided_differences() {
        let k = vec![c(3.0); 6];
        let d = forward_difference(&k, 0.1);
        assert!(d[..5].iter().all(|z| z.norm() == 0.0));

        let ramp: Vec<_> = (0..5).map(|j| c(0.25 * j as f64)).collect();
        let d = forward_difference(&ramp, 0.25);
        assert!(d[..4].iter().all(|z| (z - c(1.0)).norm() < 1e-15));
        let d = backward_difference(&ramp, 0.25);
        assert!(d[1..].iter().all(|z| (z - c(1.0)).norm() < 1e-15));

        let bump = [c(0.0), c(1.0), c(0.0)];
        assert_eq!(forward_difference(&bump, 1.0), vec![c(1.0), c(-1.0), c(0.0)]);
        assert_eq!(backward_difference(&bump, 1.0), vec![c(0.0), c(1.0), c(-1.0)]);
    }

    #[test]
    fn third_derivative_first_row() {
        let g = GridSpec::new(4).unwrap();
        let d3 = third_derivative(&g);
        let h = 1.0 / g.dx().powi(3);
        let row: Vec<f64> = (0..5).map(|j| d3.get(0, j) / h).collect();
        assert_eq!(row, vec![0.0, -1.0, 0.5, 0.0, 0.0]);
        let last: Vec<f64> = (0..5).map(|j| d3.get(4, j) / h).collect();
        assert_eq!(last, vec![0.0, 0.0, -0.5, 1.0, 0.0]);
    }

    #[test]
    fn third_derivative_exact_on_cubics() {
        let g = GridSpec::new(10).unwrap();
        let d3 = third_derivative(&g);
        let u: Vec<Complex64> = g.nodes().map(|x| c(x * x * x)).collect();
        let y = d3.matvec(&u);
        for j in 2..=8 {
            assert!((y[j] - c(6.0)).norm() < 1e-9, "row {j}: {}", y[j]);
        }
    }

    #[test]
    fn third_derivative_is_composition_on_interior() {
        let g = GridSpec::new(10).unwrap();
        let d = first_derivative(&g).to_dense();
        let n = g.len();
        // dense D⁺ and D⁻ with zero extension
        let mut dp = vec![vec![0.0; n]; n];
        let mut dm = vec![vec![0.0; n]; n];
        for i in 0..n {
            dp[i][i] = -1.0 / g.dx();
            if i + 1 < n {
                dp[i][i + 1] = 1.0 / g.dx();
            }
            dm[i][i] = 1.0 / g.dx();
            if i > 0 {
                dm[i][i - 1] = -1.0 / g.dx();
            }
        }
        let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
            let mut r = vec![vec![0.0; n]; n];
            for i in 0..n {
                for k in 0..n {
                    for j in 0..n {
                        r[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            r
        };
        let composed = mul(&d, &mul(&dp, &dm));
        let d3 = third_derivative(&g).to_dense();
        for i in 2..n - 2 {
            for j in 0..n {
                assert!((composed[i][j] - d3[i][j]).abs() < 1e-9 * (1.0 / g.dx().powi(3)), "({i},{j})");
            }
        }
    }

    #[test]
    fn symmetry_structure() {
        for m in [8, 50, 200] {
            let g = GridSpec::new(m).unwrap();
            let ops = DifferenceOperators::new(&g);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    assert_eq!(ops.first.get(i, j), -ops.first.get(j, i));
                    assert_eq!(ops.second.get(i, j), ops.second.get(j, i));
                    assert_eq!(ops.third.get(i, j), -ops.third.get(j, i));
                }
            }
        }
    }

    #[test]
    fn central_difference_matches_matrix() {
        let g = GridSpec::new(12).unwrap();
        let u: Vec<Complex64> = g.nodes().map(|x| Complex64::new(x.sin(), x * x)).collect();
        let a = central_difference(&u, g.dx());
        let b = first_derivative(&g).matvec(&u);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn banded_get_outside_band_is_zero() {
        let g = GridSpec::new(8).unwrap();
        let d2 = second_derivative(&g);
        assert_eq!(d2.get(0, 2), 0.0);
        assert_eq!(d2.get(5, 1), 0.0);
        assert_eq!(d2.row_span(0), 0..2);
        assert_eq!(d2.row_span(8), 7..9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), n)
        }

        fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
        }

        proptest! {
            #[test]
            fn quadratic_forms(v in vector(21)) {
                let g = GridSpec::new(20).unwrap();
                let ops = DifferenceOperators::new(&g);
                let scale = g.dx().powi(-3);
                let q3 = inner(&ops.third.matvec(&v), &v);
                prop_assert!(q3.re.abs() <= 1e-12 * scale);
                let q2 = inner(&ops.second.matvec(&v), &v);
                prop_assert!(q2.im.abs() <= 1e-12 * scale);
                prop_assert!(q2.re <= 1e-12 * scale);
            }
        }
    }
}
