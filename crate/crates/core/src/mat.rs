//! Small dense complex square matrices used as the blocks of coefficient
//! algebra elements.

use num_traits::{One, Zero};

use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C::one();
        }
        m
    }

    /// Builds from row-major data; panics if the length is not a square.
    pub fn from_rows(n: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data must be n*n");
        CMat { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.data
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        if n == 1 {
            return CMat { n, data: vec![self.data[0] * other.data[0]] };
        }
        let mut out = vec![C::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * *b;
                }
            }
        }
        CMat { n, data: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        CMat { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        CMat { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..self.n).fold(C::zero(), |acc, i| acc + self.data[i * self.n + i])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn is_exact_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let size = n * m;
        let mut out = Self::zeros(size);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.data[(i * m + k) * size + j * m + l] = a * other.data[k * m + l];
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn product_and_adjoint() {
        let a = CMat::from_rows(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0)]);
        let b = CMat::from_rows(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ab = a.matmul(&b);
        assert_eq!(ab.get(0, 0), c(0.0, 1.0));
        assert_eq!(ab.get(0, 1), c(1.0, 0.0));
        assert_eq!(ab.get(1, 0), c(0.0, 0.0));
        assert_eq!(ab.get(1, 1), c(2.0, 0.0));
        let adj = a.adjoint();
        assert_eq!(adj.get(1, 0), c(0.0, -1.0));
        // (ab)* = b* a*
        assert_eq!(ab.adjoint(), b.adjoint().matmul(&a.adjoint()));
    }

    #[test]
    fn kron_of_identities() {
        let i2 = CMat::<f64>::identity(2);
        let i3 = CMat::<f64>::identity(3);
        assert_eq!(i2.kron(&i3), CMat::identity(6));
    }
}
