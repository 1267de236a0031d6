//! Linear systems `x = A x + b` arising from Markov chains.
//!
//! Exact mode clears denominators row by row and runs fraction-free
//! (Bareiss) elimination over big integers. Float mode uses a dense LU
//! factorization for moderate sizes and Gauss-Seidel otherwise.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::models::rational::Rational;

/// Sparse system `x_i = Σ_j a_ij x_j + b_i` over unknowns `0..n`.
#[derive(Clone, Debug, Default)]
pub struct System<T> {
    pub rows: Vec<Vec<(usize, T)>>,
    pub rhs: Vec<T>,
}

/// Solves `(I - A) x = b` exactly. The matrix must be non-singular, which
/// holds whenever every unknown leaves the unknown set with positive
/// probability eventually.
pub fn solve_exact(sys: &System<Rational>) -> Vec<Rational> {
    let n = sys.rhs.len();
    if n == 0 {
        return Vec::new();
    }
    // Integer augmented matrix of (I - A | b), each row scaled by its denominator lcm.
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut dense: Vec<Rational> = vec![Rational::zero(); n + 1];
        dense[i] = Rational::one();
        for (j, a) in &sys.rows[i] {
            dense[*j] -= a;
        }
        dense[n] = sys.rhs[i].clone();
        let lcm = dense.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        m.push(dense.iter().map(|v| v.numer() * (&lcm / v.denom())).collect());
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&i| !m[i][k].is_zero()).expect("singular Markov system");
        m.swap(k, pivot);
        let (head, tail) = m.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for row in tail.iter_mut() {
            let factor = row[k].clone();
            for j in k + 1..=n {
                let v = &row[j] * &pivot_row[k] - &factor * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x: Vec<Rational> = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_integer(m[i][n].clone());
        for j in i + 1..n {
            if !m[i][j].is_zero() {
                acc -= Rational::from_integer(m[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / Rational::from_integer(m[i][i].clone());
    }
    x
}

/// Size up to which float systems are solved by dense LU.
pub const DENSE_LIMIT: usize = 1500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FloatSolver {
    /// Dense LU for systems up to [`DENSE_LIMIT`] unknowns, Gauss-Seidel above.
    #[default]
    Auto,
    Dense,
    GaussSeidel,
}

pub const GS_THRESHOLD: f64 = 1e-12;
pub const GS_MAX_ITERATIONS: usize = 1_000_000;

pub fn solve_f64(sys: &System<f64>, solver: FloatSolver) -> Vec<f64> {
    let n = sys.rhs.len();
    match solver {
        FloatSolver::Dense => solve_dense(sys),
        FloatSolver::GaussSeidel => gauss_seidel(sys),
        FloatSolver::Auto if n <= DENSE_LIMIT => solve_dense(sys),
        FloatSolver::Auto => gauss_seidel(sys),
    }
}

fn solve_dense(sys: &System<f64>) -> Vec<f64> {
    let n = sys.rhs.len();
    let mut a = vec![0.0; n * n];
    let mut b = sys.rhs.clone();
    for i in 0..n {
        a[i * n + i] = 1.0;
        for &(j, v) in &sys.rows[i] {
            a[i * n + j] -= v;
        }
    }
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[p * n + k].abs() {
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let d = a[k * n + k];
        if d == 0.0 {
            continue;
        }
        for i in k + 1..n {
            let f = a[i * n + k] / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }
    x
}

fn gauss_seidel(sys: &System<f64>) -> Vec<f64> {
    let n = sys.rhs.len();
    let mut x = vec![0.0; n];
    for _ in 0..GS_MAX_ITERATIONS {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut diag = 0.0;
            let mut acc = sys.rhs[i];
            for &(j, v) in &sys.rows[i] {
                if j == i {
                    diag += v;
                } else {
                    acc += v * x[j];
                }
            }
            let new = acc / (1.0 - diag);
            delta = delta.max((new - x[i]).abs());
            x[i] = new;
        }
        if delta < GS_THRESHOLD {
            break;
        }
    }
    x
}
