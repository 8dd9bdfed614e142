//! Small dense linear algebra used by the band solver and propagators:
//! a symmetric-tridiagonal eigensolver (implicit QL with Wilkinson shifts)
//! and a Pade matrix exponential for skew-Hermitian arguments.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric tridiagonal matrix.
///
/// `diag` holds the n diagonal entries and `off` the n-1 off-diagonal
/// entries. Returns eigenvalues in ascending order with the matching
/// eigenvectors as columns of the returned matrix.
pub fn eig_sym_tridiag(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n-1");
    let mut d = diag.to_vec();
    // e is padded so e[n-1] = 0, as the QL sweep expects
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = Array2::<f64>::eye(n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a negligible off-diagonal element
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Numerical(
                    "tridiagonal QL did not converge in 50 sweeps".into(),
                ));
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // accumulate the rotation into the eigenvector matrix
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, permuting eigenvector columns to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (jnew, &jold) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, jnew)] = z[(k, jold)];
        }
    }
    Ok((values, vectors))
}

/// Matrix exponential by scaling-and-squaring with a diagonal [6/6] Pade
/// approximant. For skew-Hermitian input the approximant is exactly
/// unitary in exact arithmetic.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    // 1-norm based scaling so the Pade argument stays small
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let s = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 2f64.powi(-s);
    let a_s = a.mapv(|v| v * scale);

    // Pade 6 coefficients
    const C: [f64; 7] = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let id = Array2::<C64>::eye(n);
    let a2 = a_s.dot(&a_s);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    // even part: c0 I + c2 A^2 + c4 A^4 + c6 A^6
    let even = &id * C64::new(C[0], 0.0)
        + &a2 * C64::new(C[2], 0.0)
        + &a4 * C64::new(C[4], 0.0)
        + &a6 * C64::new(C[6], 0.0);
    // odd part: A (c1 I + c3 A^2 + c5 A^4)
    let odd_inner = &id * C64::new(C[1], 0.0) + &a2 * C64::new(C[3], 0.0) + &a4 * C64::new(C[5], 0.0);
    let odd = a_s.dot(&odd_inner);
    let num = &even + &odd;
    let den = &even - &odd;
    let mut x = solve_dense(&den, &num);
    for _ in 0..s {
        x = x.dot(&x);
    }
    x
}

/// Solve A X = B for X by Gaussian elimination with partial pivoting.
fn solve_dense(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].norm();
        for r in col + 1..n {
            let v = m[(r, col)].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                m.swap((col, c), (piv, c));
            }
            for c in 0..x.ncols() {
                x.swap((col, c), (piv, c));
            }
        }
        let d = m[(col, col)];
        for r in col + 1..n {
            let f = m[(r, col)] / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = m[(col, c)];
                m[(r, c)] -= f * v;
            }
            for c in 0..x.ncols() {
                let v = x[(col, c)];
                x[(r, c)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = m[(col, col)];
        for c in 0..x.ncols() {
            let mut acc = x[(col, c)];
            for k in col + 1..n {
                acc -= m[(col, k)] * x[(k, c)];
            }
            x[(col, c)] = acc / d;
        }
    }
    x
}

/// y = M x for a dense complex matrix.
pub fn matvec(m: &Array2<C64>, x: &[C64], y: &mut [C64]) {
    let n = m.nrows();
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(y.len(), n);
    let ms = m.as_slice().expect("contiguous matrix");
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &ms[i * n..(i + 1) * n];
        let mut acc = C64::new(0.0, 0.0);
        for (mij, xj) in row.iter().zip(x.iter()) {
            acc += mij * xj;
        }
        *yi = acc;
    }
}

/// <a|b> with the convention that `a` is conjugated.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Real eigenvector columns promoted to complex state vectors.
pub fn column_c64(m: &Array2<f64>, j: usize) -> Array1<C64> {
    Array1::from_iter((0..m.nrows()).map(|i| C64::new(m[(i, j)], 0.0)))
}
