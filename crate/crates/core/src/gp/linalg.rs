//! Dense lower-triangular factorization used by the GP code.

/// Jitter ladder as multiples of the kernel scale: 1e-6, 1e-5, 1e-4, 1e-3.
pub(crate) const JITTER_STEPS: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];

/// Cholesky factor `L` of a symmetric positive-definite `n x n` matrix, stored row-major.
#[derive(Clone, Debug)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factorizes `a + shift * I`. `a` is row-major and only its lower triangle is read.
    /// Returns `None` when a pivot is not strictly positive.
    pub(crate) fn factor_shifted(a: &[f64], n: usize, shift: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            let row_i = i * n;
            for j in 0..=i {
                let row_j = j * n;
                let mut sum = a[row_i + j];
                if i == j {
                    sum += shift;
                }
                for k in 0..j {
                    sum -= l[row_i + k] * l[row_j + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l[row_i + i] = sum.sqrt();
                } else {
                    l[row_i + j] = sum / l[row_j + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }

    /// Factorizes `a + (base + jitter) * I`, walking the jitter ladder scaled by `scale`.
    /// Returns the factor and the jitter that succeeded.
    pub(crate) fn factor_with_jitter(
        a: &[f64],
        n: usize,
        base: f64,
        scale: f64,
    ) -> Option<(Self, f64)> {
        JITTER_STEPS.iter().find_map(|step| {
            let jitter = step * scale;
            Self::factor_shifted(a, n, base + jitter).map(|c| (c, jitter))
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// Solves `L x = b` in place.
    pub(crate) fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - dot) / self.l[i * n + i];
        }
    }

    /// Solves `L^T x = b` in place.
    pub(crate) fn solve_upper_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..n {
                sum -= self.l[k * n + i] * b[k];
            }
            b[i] = sum / self.l[i * n + i];
        }
    }

    /// Solves `(L L^T) x = b` in place.
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    pub(crate) fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.at(i, i).ln()).sum::<f64>()
    }
}
