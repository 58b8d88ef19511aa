//! Small square integer matrices used for Weyl group elements and lattice
//! endomorphisms. Plain `i64` arithmetic; these never exceed rank 8 and
//! entries stay tiny.

use num_rational::Rational64;
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SqMat {
    pub n: usize,
    pub a: Vec<i64>,
}

impl SqMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        SqMat { n, a }
    }

    pub fn from_rows(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            a.extend_from_slice(r);
        }
        SqMat { n, a }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &SqMat) -> SqMat {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == 0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += s * other.a[k * n + j];
                }
            }
        }
        SqMat { n, a: out }
    }

    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        let n = self.n;
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| (0..n).map(|j| self.a[i * n + j] * v[j]).sum())
            .collect()
    }

    pub fn apply_rational(&self, v: &[Rational64]) -> Vec<Rational64> {
        let n = self.n;
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = Rational64::zero();
                for j in 0..n {
                    acc += Rational64::from_integer(self.a[i * n + j]) * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == SqMat::identity(self.n)
    }

    pub fn is_minus_identity(&self) -> bool {
        let mut m = SqMat::identity(self.n);
        for x in m.a.iter_mut() {
            *x = -*x;
        }
        *self == m
    }

    pub fn pow(&self, k: u64) -> SqMat {
        let mut acc = SqMat::identity(self.n);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative order; panics past the bound (callers pass finite
    /// order matrices only).
    pub fn order(&self, bound: u64) -> u64 {
        let mut m = self.clone();
        for k in 1..=bound {
            if m.is_identity() {
                return k;
            }
            m = m.mul(self);
        }
        panic!("matrix order exceeds bound {bound}");
    }

    pub fn transpose(&self) -> SqMat {
        let n = self.n;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.a[i * n + j];
            }
        }
        SqMat { n, a: out }
    }

    pub fn to_int_matrix(&self) -> crate::intlin::IntMatrix {
        crate::intlin::IntMatrix::from_i64(self.n, self.n, &self.a)
    }
}

/// Rational square matrix; used only for lattice basis changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMat {
    pub n: usize,
    pub a: Vec<Rational64>,
}

impl QMat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![Rational64::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = Rational64::from_integer(1);
        }
        QMat { n, a }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Rational64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Rational64) {
        self.a[i * self.n + j] = v;
    }

    pub fn from_sq(m: &SqMat) -> QMat {
        QMat {
            n: m.n,
            a: m.a.iter().map(|&x| Rational64::from_integer(x)).collect(),
        }
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        let n = self.n;
        let mut out = vec![Rational64::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += s * other.a[k * n + j];
                }
            }
        }
        QMat { n, a: out }
    }

    pub fn apply(&self, v: &[Rational64]) -> Vec<Rational64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = Rational64::zero();
                for j in 0..n {
                    acc += self.a[i * n + j] * v[j];
                }
                acc
            })
            .collect()
    }

    /// Exact inverse by Gauss-Jordan; panics when singular.
    pub fn inverse(&self) -> QMat {
        let n = self.n;
        let mut m = self.a.clone();
        let mut inv = QMat::identity(n).a;
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !m[r * n + col].is_zero())
                .expect("singular matrix");
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
            let p = m[col * n + col];
            for j in 0..n {
                m[col * n + j] /= p;
                inv[col * n + j] /= p;
            }
            for r in 0..n {
                if r != col && !m[r * n + col].is_zero() {
                    let f = m[r * n + col];
                    for j in 0..n {
                        let t = m[col * n + j] * f;
                        m[r * n + j] -= t;
                        let t = inv[col * n + j] * f;
                        inv[r * n + j] -= t;
                    }
                }
            }
        }
        QMat { n, a: inv }
    }

    /// Integer entries check, returning the integral matrix when exact.
    pub fn to_integer(&self) -> Option<SqMat> {
        let mut a = Vec::with_capacity(self.n * self.n);
        for x in &self.a {
            if *x.denom() != 1 {
                return None;
            }
            a.push(*x.numer());
        }
        Some(SqMat { n: self.n, a })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = QMat {
            n: 2,
            a: vec![
                Rational64::new(2, 1),
                Rational64::new(1, 1),
                Rational64::new(1, 1),
                Rational64::new(1, 1),
            ],
        };
        let inv = m.inverse();
        assert_eq!(m.mul(&inv), QMat::identity(2));
    }

    #[test]
    fn order_of_rotation() {
        let m = SqMat::from_rows(&[&[0, -1], &[1, -1]]);
        assert_eq!(m.order(10), 3);
    }
}
