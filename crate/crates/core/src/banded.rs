//! Banded LU factorisation with partial pivoting.
//!
//! Storage follows the usual band layout with `kl` extra super-diagonals
//! reserved for pivoting fill-in. Multipliers of each elimination step are
//! kept per column and replayed in order during the solve, so row swaps made
//! in later steps never disturb earlier multipliers.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("matrix is singular to working precision at column {0}")]
    Singular(usize),
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    /// Whether `(i, j)` lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] += value;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorises in place; consumes the matrix.
    pub fn factor(mut self) -> Result<BandLu, BandError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(BandError::Singular(k));
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let si = self.slot(i, k);
                let m = self.data[si] / pivot;
                self.data[si] = 0.0;
                lower[k * kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let upper = self.data[self.slot(k, j)];
                        let sj = self.slot(i, j);
                        self.data[sj] -= m * upper;
                    }
                }
            }
        }
        Ok(BandLu {
            upper: self,
            lower,
            pivots,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    upper: BandMatrix,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), BandError> {
        let u = &self.upper;
        let (n, kl, ku) = (u.n, u.kl, u.ku);
        if b.len() != n {
            return Err(BandError::DimensionMismatch {
                got: b.len(),
                expected: n,
            });
        }
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut sum = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                sum -= u.data[u.slot(k, j)] * b[j];
            }
            b[k] = sum / u.data[u.slot(k, k)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tridiagonal_system() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        for i in 0..3 {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, 1.0);
            }
            if i < 2 {
                a.set(i, i + 1, 1.0);
            }
        }
        let lu = a.factor().unwrap();
        let mut b = vec![4.0, 8.0, 8.0];
        lu.solve_in_place(&mut b).unwrap();
        for (x, e) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn needs_pivoting() {
        // Zero on the diagonal forces a row swap.
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.set(0, 0, 0.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 0.0);
        let lu = a.factor().unwrap();
        let mut b = vec![3.0, 5.0];
        lu.solve_in_place(&mut b).unwrap();
        assert_eq!(b, vec![5.0, 3.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert_eq!(a.factor().unwrap_err(), BandError::Singular(0));
    }

    #[test]
    #[should_panic(expected = "outside band")]
    fn setting_outside_band_panics() {
        let mut a = BandMatrix::zeros(5, 1, 1);
        a.set(0, 3, 1.0);
    }

    proptest! {
        // Dense LU from nalgebra is the oracle.
        #[test]
        fn matches_dense_solver(
            n in 2usize..30,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in prop::collection::vec(-1.0f64..1.0, 30 * 30 + 30),
        ) {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if band.in_band(i, j) {
                        // keep it comfortably nonsingular but not diagonally dominant
                        let v = seed[i * 30 + j] + if i == j { 0.5_f64.copysign(seed[i * 30 + j]) } else { 0.0 };
                        band.set(i, j, v);
                        dense[(i, j)] = v;
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|i| seed[900 + i]).collect();
            let expect = dense.clone().lu().solve(&nalgebra::DVector::from_vec(rhs.clone()));
            prop_assume!(expect.is_some());
            let expect = expect.unwrap();
            prop_assume!(expect.iter().all(|v| v.abs() < 1e6));
            let mut x = rhs.clone();
            band.factor().unwrap().solve_in_place(&mut x).unwrap();
            let scale = 1.0 + expect.amax();
            for i in 0..n {
                prop_assert!((x[i] - expect[i]).abs() <= 1e-8 * scale, "i={} got {} want {}", i, x[i], expect[i]);
            }
        }
    }
}
