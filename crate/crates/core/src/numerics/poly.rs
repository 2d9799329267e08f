//! Real polynomials and a Durand-Kerner root finder for low degrees.

use num_complex::Complex64;

use super::NumericsError;

/// Maximum degree accepted by [`poly_roots`].
pub const MAX_ROOT_DEGREE: usize = 8;

const MAX_ITERATIONS: usize = 500;
const STEP_TOLERANCE: f64 = 1e-10;

/// Real polynomial stored with coefficients highest degree first.
///
/// The representation is canonical: leading zeros are stripped on
/// construction, and the zero polynomial is stored as `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first_nonzero = coeffs.iter().position(|&c| c != 0.0);
        match first_nonzero {
            Some(k) => Self { coeffs: coeffs[k..].to_vec() },
            None => Self { coeffs: vec![0.0] },
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients, highest degree first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// All complex roots (with multiplicity) of a real polynomial of degree <= 8.
///
/// Uses Durand-Kerner iteration on the monic normalization. Each returned
/// root z satisfies |p(z)| <= 1e-8 * max|coefficient|.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>, NumericsError> {
    if p.is_zero() {
        return Err(NumericsError::ZeroPolynomial);
    }
    let degree = p.degree();
    if degree > MAX_ROOT_DEGREE {
        return Err(NumericsError::DegreeTooHigh(degree, MAX_ROOT_DEGREE));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }

    // monic normalization
    let lead = p.coeffs[0];
    let monic: Vec<f64> = p.coeffs.iter().map(|c| c / lead).collect();
    let eval_monic = |z: Complex64| -> Complex64 {
        monic
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    };

    // Cauchy bound gives a radius that encloses every root.
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4;
            Complex64::from_polar(radius, angle)
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0.0f64;
        for k in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // coincident estimates; nudge apart and keep iterating
                z[k] += Complex64::new(1e-8, 1e-8);
                max_step = f64::MAX;
                continue;
            }
            let step = eval_monic(z[k]) / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step <= STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    let max_coeff = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let residual_ok = z.iter().all(|&r| p.eval_complex(r).norm() <= 1e-8 * max_coeff);
    if !converged && !residual_ok {
        return Err(NumericsError::NoConvergence);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sort_by_re_im(mut roots: Vec<Complex64>) -> Vec<Complex64> {
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        roots
    }

    #[test]
    fn roots_of_z_squared_minus_one() {
        let p = Polynomial::new(vec![1.0, 0.0, -1.0]);
        let roots = sort_by_re_im(poly_roots(&p).unwrap());
        assert!((roots[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-10);
        assert!((roots[1] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn quartic_symmetry_case() {
        // z^4 - alpha^4 has four roots of modulus alpha
        let alpha = 0.3f64;
        let p = Polynomial::new(vec![1.0, 0.0, 0.0, 0.0, -alpha.powi(4)]);
        let roots = poly_roots(&p).unwrap();
        assert_eq!(roots.len(), 4);
        for r in roots {
            assert!((r.norm() - alpha).abs() < 1e-9, "modulus {}", r.norm());
        }
    }

    #[test]
    fn residuals_meet_contract() {
        let p = Polynomial::new(vec![2.0, -3.0, 0.5, 1.0, -0.25]);
        let max_coeff = 3.0;
        for r in poly_roots(&p).unwrap() {
            assert!(p.eval_complex(r).norm() <= 1e-8 * max_coeff);
        }
    }

    #[test]
    fn repeated_roots_are_reported_with_multiplicity() {
        // (z - 1)^2 (z + 2)
        let p = Polynomial::new(vec![1.0, 0.0, -3.0, 2.0]);
        let roots = poly_roots(&p).unwrap();
        let near_one = roots.iter().filter(|r| (*r - Complex64::new(1.0, 0.0)).norm() < 1e-4).count();
        assert_eq!(near_one, 2);
    }

    #[test]
    fn zero_polynomial_rejected() {
        let p = Polynomial::new(vec![0.0, 0.0]);
        assert_eq!(poly_roots(&p).unwrap_err(), NumericsError::ZeroPolynomial);
    }

    #[test]
    fn high_degree_rejected() {
        let p = Polynomial::new(vec![1.0; 11]);
        assert!(matches!(poly_roots(&p), Err(NumericsError::DegreeTooHigh(10, 8))));
    }

    #[test]
    fn canonical_form_strips_leading_zeros() {
        let p = Polynomial::new(vec![0.0, 0.0, 1.0, -1.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.coefficients(), &[1.0, -1.0]);
    }

    #[test]
    fn horner_evaluation() {
        let p = Polynomial::new(vec![2.0, -1.0, 3.0]);
        assert_eq!(p.eval(2.0), 2.0 * 4.0 - 2.0 + 3.0);
    }
}
