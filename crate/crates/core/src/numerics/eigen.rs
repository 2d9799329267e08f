//! Eigenvalues of small real matrices.
//!
//! The update operators studied here are non-symmetric, so we need a general
//! real eigensolver. For dimension <= 4 the characteristic polynomial
//! (Faddeev-LeVerrier) plus the Durand-Kerner root finder is accurate and
//! cheap; for larger operators we balance, reduce to upper Hessenberg form
//! and run the classic double-shift QR iteration (EISPACK balanc/elmhes/hqr
//! lineage, eigenvalues only).

use num_complex::Complex64;

use super::poly::{poly_roots, Polynomial};
use super::{Matrix, NumericsError};

/// Largest dimension accepted by the eigensolvers.
pub const MAX_EIGEN_DIM: usize = 64;

const CHAR_POLY_DIM: usize = 4;
const MAX_QR_ITERATIONS: usize = 60;

/// Monic characteristic polynomial det(zI - A) via the Faddeev-LeVerrier
/// trace recursion. Intended for dimension <= 4 (it is exact there up to
/// rounding; conditioning degrades for larger matrices).
pub fn char_poly(m: &Matrix) -> Result<Polynomial, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut aux = Matrix::identity(n);
    for k in 1..=n {
        aux = m.matmul(&aux)?;
        let c = -aux.trace() / k as f64;
        coeffs[k] = c;
        for i in 0..n {
            aux.set(i, i, aux.get(i, i) + c);
        }
    }
    Ok(Polynomial::new(coeffs))
}

/// All eigenvalues of a square matrix of dimension <= 64.
///
/// Dimension <= 4 goes through the characteristic polynomial; anything larger
/// through [`schur_eigenvalues`].
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() > MAX_EIGEN_DIM {
        return Err(NumericsError::DimensionTooLarge(m.rows(), MAX_EIGEN_DIM));
    }
    if m.rows() <= CHAR_POLY_DIM {
        poly_roots(&char_poly(m)?)
    } else {
        schur_eigenvalues(m)
    }
}

/// Largest eigenvalue magnitude, max over the spectrum of |lambda|.
pub fn max_abs_eigenvalue(m: &Matrix) -> Result<f64, NumericsError> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Eigenvalues by balancing + Hessenberg reduction + double-shift QR.
///
/// Works for any supported dimension; exposed separately so callers and tests
/// can cross-check it against the characteristic-polynomial route.
pub fn schur_eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if m.rows() > MAX_EIGEN_DIM {
        return Err(NumericsError::DimensionTooLarge(m.rows(), MAX_EIGEN_DIM));
    }
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j)).collect())
        .collect();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(&mut a)
}

/// Iterative diagonal scaling by radix powers so that row and column norms
/// match (Parlett-Reinsch). Leaves the spectrum untouched and greatly
/// improves QR accuracy on operators whose entries span many magnitudes.
fn balance(a: &mut [Vec<f64>]) {
    let n = a.len();
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                let mut c_scaled = c;
                while c_scaled < g {
                    f *= RADIX;
                    c_scaled *= SQRDX;
                }
                g = r * RADIX;
                while c_scaled > g {
                    f /= RADIX;
                    c_scaled /= SQRDX;
                }
                if (c_scaled + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for j in 0..n {
                        a[j][i] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Reduction to upper Hessenberg form by stabilized elementary similarity
/// transformations with pivoting.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for m in 1..(n - 1) {
        let mut x = 0.0f64;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..n {
                let tmp = a[piv][j];
                a[piv][j] = a[m][j];
                a[m][j] = tmp;
            }
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = 0.0;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 0..n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..(i - 1) {
            a[i][j] = 0.0;
        }
    }
}

/// Double-shift QR iteration on an upper Hessenberg matrix, eigenvalues only.
fn hqr(a: &mut [Vec<f64>]) -> Result<Vec<Complex64>, NumericsError> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(out);
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0f64;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            // find a negligible subdiagonal element to split the problem
            let mut l = nn;
            while l >= 1 {
                let lu = l as usize;
                let mut s = a[lu - 1][lu - 1].abs() + a[lu][lu].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[lu][lu - 1].abs() <= f64::EPSILON * s {
                    a[lu][lu - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nnu = nn as usize;
            let mut x = a[nnu][nnu];
            if l == nn {
                // 1x1 block: one real eigenvalue
                out[nnu] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[nnu - 1][nnu - 1];
            let mut w = a[nnu][nnu - 1] * a[nnu - 1][nnu];
            if l == nn - 1 {
                // 2x2 block: a real pair or a complex conjugate pair
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x_shifted = x + t;
                if q >= 0.0 {
                    let zs = p + z.copysign(if p == 0.0 { 1.0 } else { p });
                    let r1 = x_shifted + zs;
                    let r2 = if zs != 0.0 { x_shifted - w / zs } else { r1 };
                    out[nnu - 1] = Complex64::new(r1, 0.0);
                    out[nnu] = Complex64::new(r2, 0.0);
                } else {
                    out[nnu - 1] = Complex64::new(x_shifted + p, -z);
                    out[nnu] = Complex64::new(x_shifted + p, z);
                }
                nn -= 2;
                break;
            }

            if its == MAX_QR_ITERATIONS {
                return Err(NumericsError::NoConvergence);
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift to break limit cycles
                t += x;
                for i in 0..=nnu {
                    a[i][i] -= x;
                }
                let s = a[nnu][nnu - 1].abs() + a[nnu - 1][nnu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // form the implicit double shift and locate the sweep start
            let lu = l as usize;
            let mut m = nnu - 2;
            let mut p;
            let mut q;
            let mut r;
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let scale = p.abs() + q.abs() + r.abs();
                p /= scale;
                q /= scale;
                r /= scale;
                if m == lu {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nnu {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // double QR sweep over rows l..nn, columns m..nn
            for k in m..nnu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nnu - 1 { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r)
                    .sqrt()
                    .copysign(if p == 0.0 { 1.0 } else { p });
                if s != 0.0 {
                    if k == m {
                        if l != m as isize {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nnu - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                    for i in lu..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nnu - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted_norms(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal_case() {
        let m = Matrix::diagonal(&[0.9, 0.5, 0.1]);
        assert!((max_abs_eigenvalue(&m).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn companion_matrix_of_quadratic() {
        // companion of z^2 - z + 0.21, roots {0.7, 0.3} by the quadratic formula
        let m = Matrix::from_rows(&[&[1.0, -0.21], &[1.0, 0.0]]).unwrap();
        assert!((max_abs_eigenvalue(&m).unwrap() - 0.7).abs() < 1e-10);
        let via_qr = schur_eigenvalues(&m)
            .unwrap()
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!((via_qr - 0.7).abs() < 1e-10);
    }

    #[test]
    fn momentum_free_covariance_block_reduces_to_scalar_recursion() {
        // 4x4 heavy-ball covariance block at alpha=0, delta=1, sigma^2=0.5, c=2.
        // With momentum off the block's only nonzero eigenvalue must equal the
        // per-step factor of the scalar covariance recursion
        // phi' = ((1-x)^2 + (c-1)x^2) phi.
        let (x, c) = (0.5, 2.0);
        let t = 1.0 - x;
        let top = t * t + (c - 1.0) * x * x;
        let m = Matrix::from_rows(&[
            &[top, 0.0, 0.0, 0.0],
            &[t, 0.0, 0.0, 0.0],
            &[t, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        // independent oracle: iterate the scalar recursion and read off the ratio
        let mut phi = 1.0;
        for _ in 0..8 {
            phi *= (1.0 - x) * (1.0 - x) + (c - 1.0) * x * x;
        }
        let ratio = phi.powf(1.0 / 8.0);
        assert!((max_abs_eigenvalue(&m).unwrap() - ratio).abs() < 1e-12);
    }

    #[test]
    fn complex_pair_from_rotation() {
        let theta = 0.77f64;
        let m = Matrix::from_rows(&[&[theta.cos(), -theta.sin()], &[theta.sin(), theta.cos()]])
            .unwrap();
        let eigs = eigenvalues(&m).unwrap();
        for e in &eigs {
            assert!((e.norm() - 1.0).abs() < 1e-10);
        }
        let max_im = eigs.iter().map(|e| e.im.abs()).fold(0.0f64, f64::max);
        assert!((max_im - theta.sin()).abs() < 1e-10);
    }

    #[test]
    fn jordan_block_repeated_eigenvalue() {
        let m = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        for e in eigenvalues(&m).unwrap() {
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn char_poly_and_qr_agree_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let m = Matrix::from_fn(4, 4, |_, _| rng.gen_range(-1.5..1.5));
            let a = sorted_norms(eigenvalues(&m).unwrap().iter().map(|z| z.norm()).collect());
            let b = sorted_norms(
                schur_eigenvalues(&m)
                    .unwrap()
                    .iter()
                    .map(|z| z.norm())
                    .collect(),
            );
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-7, "routes disagree: {x} vs {y}");
            }
        }
    }

    #[test]
    fn trace_and_determinant_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 3, 4, 5, 6, 8] {
            for _ in 0..12 {
                let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let eigs = eigenvalues(&m).unwrap();
                let sum: Complex64 = eigs.iter().sum();
                let prod: Complex64 = eigs.iter().product();
                assert!(
                    (sum.re - m.trace()).abs() < 1e-8 * (1.0 + m.trace().abs()),
                    "trace identity failed for n={n}"
                );
                assert!(sum.im.abs() < 1e-8);
                let det = m.det().unwrap();
                assert!(
                    (prod.re - det).abs() < 1e-8 * (1.0 + det.abs()),
                    "det identity failed for n={n}: {} vs {det}",
                    prod.re
                );
            }
        }
    }

    #[test]
    fn product_of_char_poly_roots_matches_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [2usize, 3, 4] {
            for _ in 0..25 {
                let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let roots = poly_roots(&char_poly(&m).unwrap()).unwrap();
                let prod: Complex64 = roots.iter().product();
                let det = m.det().unwrap();
                assert!(
                    (prod.re - det).abs() <= 1e-8 * (1.0 + det.abs()),
                    "n={n}: {} vs {det}",
                    prod.re
                );
            }
        }
    }

    #[test]
    fn invariance_under_similarity_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [4usize, 6, 10] {
            let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            // well-conditioned transform: identity plus a small perturbation
            let s = Matrix::from_fn(n, n, |i, j| {
                if i == j { 1.0 } else { 0.2 * rng.gen_range(-1.0..1.0) }
            });
            let sim = s
                .matmul(&m)
                .unwrap()
                .matmul(&s.inverse().unwrap())
                .unwrap();
            let a = max_abs_eigenvalue(&m).unwrap();
            let b = max_abs_eigenvalue(&sim).unwrap();
            assert!((a - b).abs() < 1e-7 * (1.0 + a), "similarity broke: {a} vs {b}");
        }
    }

    #[test]
    fn kronecker_spectrum_product_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = Matrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let b = Matrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let k = super::super::kron(&a, &b);
        let expected = max_abs_eigenvalue(&a).unwrap() * max_abs_eigenvalue(&b).unwrap();
        let got = max_abs_eigenvalue(&k).unwrap();
        assert!((got - expected).abs() < 1e-7 * (1.0 + expected), "{got} vs {expected}");
    }

    #[test]
    fn rejects_non_square_and_oversized() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(eigenvalues(&m), Err(NumericsError::NotSquare { .. })));
        let big = Matrix::identity(65);
        assert!(matches!(
            eigenvalues(&big),
            Err(NumericsError::DimensionTooLarge(65, 64))
        ));
    }
}
