//! Small dense linear algebra: just enough for the bandit's per-arm ridge
//! statistics and the testbed's orthogonal mixing matrix. Dimensions here are
//! tens, not thousands, so everything is plain row-major `Vec` storage.

use rand::Rng;

use crate::scalar::Real;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n)
    }

    /// `self += x xᵀ` (symmetric rank-one update).
    pub fn add_outer(&mut self, x: &[T]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let xi = x[i];
            let row = &mut self.data[i * self.n..(i + 1) * self.n];
            for (r, &xj) in row.iter_mut().zip(x) {
                *r += xi * xj;
            }
        }
    }

    pub fn mat_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.n);
        self.rows().map(|row| dot(row, x)).collect()
    }

    /// y = Aᵀ x.
    pub fn mat_t_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![T::zero(); self.n];
        for (row, &xi) in self.rows().zip(x) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        out
    }

    /// Cholesky factorization `A = L Lᵀ`. Fails when the matrix is not
    /// (numerically) symmetric positive definite.
    pub fn cholesky(&self) -> Option<Cholesky<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= T::zero() || !s.is_finite() {
                        return None;
                    }
                    l[i * n + j] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Solves `A x = rhs` by forward and back substitution.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        debug_assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Standard normal draw via Box-Muller; sampling happens in `f64` so a given
/// seed yields the same stream regardless of the scalar type.
pub fn standard_normal<T: Real, R: Rng>(rng: &mut R) -> T {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
    T::from_f64_lossy(z)
}

/// Seeded random orthogonal matrix: Gram-Schmidt (run twice per column for
/// orthogonality near machine precision) applied to a Gaussian matrix.
pub fn random_orthogonal<T: Real, R: Rng>(n: usize, rng: &mut R) -> SquareMat<T> {
    let mut cols: Vec<Vec<T>> = (0..n)
        .map(|_| (0..n).map(|_| standard_normal(rng)).collect())
        .collect();
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let proj = dot(&cols[j], &cols[k]);
                let prev = cols[k].clone();
                for (v, p) in cols[j].iter_mut().zip(prev) {
                    *v -= proj * p;
                }
            }
            let nrm = norm(&cols[j]);
            // A zero column after projection is probability-zero for Gaussian
            // input; re-draw rather than divide by zero.
            if nrm < T::from_f64_lossy(1e-30) {
                cols[j] = (0..n).map(|_| standard_normal(rng)).collect();
                continue;
            }
            for v in cols[j].iter_mut() {
                *v /= nrm;
            }
        }
    }
    let mut m = SquareMat::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}
