//! Small dense helpers: exact integer determinants and real solves.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::real::Real;

/// Fraction-free Gaussian elimination; exact for integer matrices.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

pub fn det_i128(m: &[Vec<i128>]) -> BigInt {
    bareiss_det(m.iter().map(|row| row.iter().map(|&x| BigInt::from(x)).collect()).collect())
}

/// Solves `a x = b` for a square `a` and several right-hand sides (columns of `b`).
pub fn solve<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<Vec<R>>) -> Option<Vec<Vec<R>>> {
    let n = a.len();
    let cols = b.first().map_or(0, |r| r.len());
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[piv][k] == R::zero() {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == R::zero() {
                continue;
            }
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
            for j in 0..cols {
                let t = b[k][j];
                b[i][j] -= f * t;
            }
        }
    }
    let mut x = vec![vec![R::zero(); cols]; n];
    for k in (0..n).rev() {
        for j in 0..cols {
            let mut s = b[k][j];
            for i in k + 1..n {
                s -= a[k][i] * x[i][j];
            }
            x[k][j] = s / a[k][k];
        }
    }
    Some(x)
}

/// Determinant by partial-pivot elimination in floating point.
pub fn det<R: Real>(mut a: Vec<Vec<R>>) -> R {
    let n = a.len();
    let mut d = R::one();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[piv][k] == R::zero() {
            return R::zero();
        }
        if piv != k {
            a.swap(k, piv);
            d = -d;
        }
        d *= a[k][k];
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    d
}

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |s, (x, y)| s + *x * *y)
}
