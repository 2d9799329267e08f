//! Exact convergence-rate analysis via covariance-evolution operators.
//!
//! For a linear error recursion `e_{t+1} = A_t e_t` with i.i.d. random
//! matrices `A_t`, the second moment `Phi_t = E[e_t (x) e_t]` evolves as
//! `vec(Phi_{t+1}) = E[A (x) A] vec(Phi_t)`. Every method here has such a
//! recursion on a stacked error state (the iterate error plus one auxiliary
//! error), and `A` is affine in the random rank-one matrix `P = a a^T`:
//! `A = X (x) I + Y (x) P` with constant block-coefficient matrices X, Y.
//! That makes `E[A (x) A]` computable exactly from the second and fourth
//! moments of the covariate law.
//!
//! For heavy ball on the two-direction discrete law the operator decouples
//! per coordinate into an explicit 4x4 block whose characteristic quartic,
//! boundary evaluations and reachability determinant have closed forms; those
//! closed forms drive the stability classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{max_abs_eigenvalue, Matrix, NumericsError, Polynomial};
use crate::optimizers::{HyperParams, Method};
use crate::problems::{MomentSet, ProblemError, ProblemInstance, ProblemKind};

/// Eigenvalue magnitudes at least `1 - DIVERGENCE_TOLERANCE` are classified
/// as divergent, absorbing root-finder noise at the stability boundary.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation requires a ScaledDiscrete instance")]
    WrongInstanceKind,
    #[error("covariance operators are defined for sgd, hb, nag and asgd")]
    UnsupportedMethod,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Per-coordinate heavy-ball parameters: momentum `alpha`, normalized step
/// `x = delta * sigma^2`, and kurtosis `c`. The drift `t = 1 + alpha - x` is
/// always recomputed, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbCoordParams {
    pub alpha: f64,
    pub x: f64,
    pub c: f64,
}

impl HbCoordParams {
    pub fn new(alpha: f64, x: f64, c: f64) -> Result<Self, SpectralError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SpectralError::InvalidParameter("alpha must lie in [0, 1]".into()));
        }
        if !(x > 0.0) {
            return Err(SpectralError::InvalidParameter("x must be positive".into()));
        }
        if !(c >= 1.0) {
            return Err(SpectralError::InvalidParameter("c must be >= 1".into()));
        }
        Ok(Self { alpha, x, c })
    }

    /// The drift term `t = 1 + alpha - x`.
    pub fn drift(&self) -> f64 {
        1.0 + self.alpha - self.x
    }
}

/// The linear map propagating an iterate-error covariance by one step.
#[derive(Debug, Clone)]
pub struct ExpectedOperator {
    pub method: Method,
    pub matrix: Matrix,
    /// Vectorization convention, so oracle comparisons are unambiguous.
    pub basis_note: String,
}

/// Outcome of the per-direction heavy-ball stability analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    DivergentTopDirection,
    SlowBottomDirection,
    Convergent,
}

impl StabilityClass {
    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::DivergentTopDirection => "divergent_top_direction",
            StabilityClass::SlowBottomDirection => "slow_bottom_direction",
            StabilityClass::Convergent => "convergent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub classification: StabilityClass,
    /// Largest magnitude over both direction operators.
    pub lambda_max: f64,
    pub lambda_max_top: f64,
    pub lambda_max_bottom: f64,
    /// The reference level `1 - 500/kappa`.
    pub bound_reference: f64,
}

/// The explicit 4x4 covariance block for heavy ball in one coordinate, in
/// the basis (theta1*theta1, theta1*theta2, theta2*theta1, theta2*theta2)
/// where theta = (current error, previous error).
pub fn hb_expected_operator(p: &HbCoordParams) -> ExpectedOperator {
    let t = p.drift();
    let (a, x, c) = (p.alpha, p.x, p.c);
    let matrix = Matrix::from_rows(&[
        &[t * t + (c - 1.0) * x * x, -a * t, -a * t, a * a],
        &[t, 0.0, -a, 0.0],
        &[t, -a, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0],
    ])
    .expect("fixed shape");
    ExpectedOperator {
        method: Method::Hb,
        matrix,
        basis_note: "per-coordinate (e_t, e_{t-1}) second moments, row-major pairs".into(),
    }
}

/// Characteristic polynomial of the 4x4 block:
/// `D(z) = z^4 - (t^2 + (c-1)x^2) z^3 + (2 alpha t^2 - 2 alpha^2) z^2
///         + (-t^2 + (c-1)x^2) alpha^2 z + alpha^4`.
pub fn characteristic_poly(p: &HbCoordParams) -> Polynomial {
    let t = p.drift();
    let (a, x, c) = (p.alpha, p.x, p.c);
    let t2 = t * t;
    let cx2 = (c - 1.0) * x * x;
    Polynomial::new(vec![
        1.0,
        -(t2 + cx2),
        2.0 * a * t2 - 2.0 * a * a,
        (-t2 + cx2) * a * a,
        a.powi(4),
    ])
}

/// Closed form of `D(1)`:
/// `(1-alpha) x (2(1-alpha^2) - x(1-alpha) - (c-1)x(1+alpha))`.
/// Non-positive values certify an eigenvalue >= 1 in that direction.
pub fn eval_d_at_one(p: &HbCoordParams) -> f64 {
    let (a, x, c) = (p.alpha, p.x, p.c);
    (1.0 - a) * x * (2.0 * (1.0 - a * a) - x * (1.0 - a) - (c - 1.0) * x * (1.0 + a))
}

/// The step-size boundary `2(1-alpha^2)/(c + (c-2) alpha)`; `D(1) <= 0`
/// exactly when `x` is at or above it.
pub fn top_direction_boundary(alpha: f64, c: f64) -> f64 {
    2.0 * (1.0 - alpha * alpha) / (c + (c - 2.0) * alpha)
}

/// The bottom-direction polynomial `G(l)`: the value of `D(1 - l/kappa)`
/// after substituting `x = c (delta sigma_1^2) / kappa`, grouped in powers of
/// `1/kappa`. Only `alpha` and `c` are read from `p`.
pub fn eval_g(p: &HbCoordParams, kappa: f64, delta_sigma1_sq: f64, ell: f64) -> f64 {
    let (a, c) = (p.alpha, p.c);
    let ds = delta_sigma1_sq;
    let l = ell;
    let k = kappa;

    let term5 = c.powi(3) * ds * ds * l.powi(3);
    let term4 = l.powi(4) - 2.0 * c * ds * l.powi(3) * (1.0 + a)
        + (2.0 * a - 3.0 * c) * c * c * ds * ds * l * l;
    let term3 = -(3.0 + a) * (1.0 - a) * l.powi(3)
        - 2.0 * (1.0 + a) * (2.0 * a - 3.0) * c * ds * l * l
        + (3.0 * c - 4.0 * a + (2.0 - c) * a * a) * c * c * ds * ds * l;
    let term2 = (3.0 - 4.0 * a - a * a + 2.0 * a.powi(3)) * l * l
        - 2.0 * c * ds * l * (3.0 - a) * (1.0 - a * a)
        - c * c * ds * ds * (1.0 - a) * (c + (c - 2.0) * a);
    let term1 = -(1.0 - a) * (1.0 - a) * (1.0 - a * a) * l + 2.0 * c * ds * (1.0 - a) * (1.0 - a * a);

    term5 / k.powi(5) + term4 / k.powi(4) + term3 / k.powi(3) + term2 / k.powi(2) + term1 / k
}

/// Closed form of the reachability determinant
/// `det(R) = alpha x^3 ((c-2)(-1 + c x) + c alpha)`.
///
/// A nonzero value certifies that the iterate covariance excites the top
/// eigendirection of the 4x4 block from any nonzero start.
pub fn r_matrix_determinant(p: &HbCoordParams) -> Result<f64, SpectralError> {
    if !(p.c > 2.0) {
        return Err(SpectralError::InvalidParameter(
            "the reachability determinant analysis requires c > 2".into(),
        ));
    }
    let (a, x, c) = (p.alpha, p.x, p.c);
    Ok(a * x.powi(3) * ((c - 2.0) * (-1.0 + c * x) + c * a))
}

/// Classifies a heavy-ball parameter choice on a two-direction discrete
/// instance: either the top direction already has an eigenvalue >= 1, or the
/// bottom direction is compared against the reference level `1 - 500/kappa`.
pub fn hb_stability_verdict(
    alpha: f64,
    delta: f64,
    instance: &ProblemInstance,
) -> Result<StabilityVerdict, SpectralError> {
    if instance.kind() != ProblemKind::ScaledDiscrete {
        return Err(SpectralError::WrongInstanceKind);
    }
    if !(delta > 0.0) {
        return Err(SpectralError::InvalidParameter("delta must be positive".into()));
    }
    let c = instance.kurtosis_c();
    let h = instance.hessian_diag();
    let top = HbCoordParams::new(alpha, delta * h[0], c)?;
    let bottom = HbCoordParams::new(alpha, delta * h[1], c)?;
    let lambda_max_top = max_abs_eigenvalue(&hb_expected_operator(&top).matrix)?;
    let lambda_max_bottom = max_abs_eigenvalue(&hb_expected_operator(&bottom).matrix)?;
    let bound_reference = 1.0 - 500.0 / instance.kappa();
    let classification = if lambda_max_top >= 1.0 - DIVERGENCE_TOLERANCE {
        StabilityClass::DivergentTopDirection
    } else if lambda_max_bottom >= bound_reference {
        StabilityClass::SlowBottomDirection
    } else {
        StabilityClass::Convergent
    };
    Ok(StabilityVerdict {
        classification,
        lambda_max: lambda_max_top.max(lambda_max_bottom),
        lambda_max_top,
        lambda_max_bottom,
        bound_reference,
    })
}

/// Number of stacked error blocks in a method's linear error recursion.
fn state_blocks(method: Method) -> Result<usize, SpectralError> {
    match method {
        Method::Sgd => Ok(1),
        Method::Hb | Method::Nag | Method::Asgd => Ok(2),
        Method::AsgdReference => Err(SpectralError::UnsupportedMethod),
    }
}

/// Block-coefficient matrices (X, Y) such that the per-step random error
/// update is `A = X (x) I_d + Y (x) P` with `P = a a^T`, on the stacked
/// error state listed in the basis note.
fn state_coefficients(method: Method, hp: &HyperParams) -> Result<(Matrix, Matrix), SpectralError> {
    let (delta, alpha) = (hp.delta, hp.alpha);
    match method {
        Method::Sgd => Ok((
            Matrix::new(1, 1, vec![1.0]).expect("shape"),
            Matrix::new(1, 1, vec![-delta]).expect("shape"),
        )),
        Method::Hb => Ok((
            Matrix::from_rows(&[&[1.0 + alpha, -alpha], &[1.0, 0.0]]).expect("shape"),
            Matrix::from_rows(&[&[-delta, 0.0], &[0.0, 0.0]]).expect("shape"),
        )),
        Method::Nag => Ok((
            Matrix::from_rows(&[&[1.0 + alpha, -alpha], &[1.0, 0.0]]).expect("shape"),
            Matrix::from_rows(&[&[-(1.0 + alpha) * delta, 0.0], &[-delta, 0.0]]).expect("shape"),
        )),
        Method::Asgd => {
            let a = hp.asgd_momentum();
            let long = hp.kappa_long * delta / hp.c3;
            let denom = hp.c3 + (1.0 - a);
            let short_weight = hp.c3 / denom;
            let avg_weight = (1.0 - a) / denom;
            let x = Matrix::from_rows(&[
                &[short_weight + avg_weight * (1.0 - a), avg_weight * a],
                &[1.0 - a, a],
            ])
            .expect("shape");
            let y = Matrix::from_rows(&[
                &[-(short_weight * delta + avg_weight * (1.0 - a) * long), 0.0],
                &[-(1.0 - a) * long, 0.0],
            ])
            .expect("shape");
            Ok((x, y))
        }
        Method::AsgdReference => Err(SpectralError::UnsupportedMethod),
    }
}

/// Builds the expected covariance operator `E[A (x) A]` for a method on an
/// instance, given a moment set for the covariate law.
///
/// The operator acts on the column-stacked covariance of the stacked error
/// state `[w - w*; aux - w*]` (aux is the previous iterate for HB, the
/// auxiliary sequence for NAG, the running average for ASGD); SGD has no
/// auxiliary block. Its dimension is `(blocks * d)^2`.
pub fn covariance_operator(
    method: Method,
    hp: &HyperParams,
    instance: &ProblemInstance,
    moments: &MomentSet,
) -> Result<ExpectedOperator, SpectralError> {
    hp.validate(method)
        .map_err(|e| SpectralError::InvalidParameter(e.to_string()))?;
    let d = instance.dimension();
    if moments.hessian.rows() != d {
        return Err(SpectralError::InvalidParameter(
            "moment set does not match instance dimension".into(),
        ));
    }
    let m = state_blocks(method)?;
    let (x, y) = state_coefficients(method, hp)?;
    let h = &moments.hessian;
    let q = &moments.fourth_moment;
    let n = m * d;
    let mut op = Matrix::zeros(n * n, n * n);
    for i in 0..m {
        for j in 0..d {
            for k in 0..m {
                for l in 0..d {
                    let row = (i * d + j) * n + (k * d + l);
                    for ip in 0..m {
                        let xi = x.get(i, ip);
                        let yi = y.get(i, ip);
                        if xi == 0.0 && yi == 0.0 {
                            continue;
                        }
                        for jp in 0..d {
                            for kp in 0..m {
                                let xk = x.get(k, kp);
                                let yk = y.get(k, kp);
                                if xk == 0.0 && yk == 0.0 {
                                    continue;
                                }
                                for lp in 0..d {
                                    let col = (ip * d + jp) * n + (kp * d + lp);
                                    let mut v = 0.0;
                                    if j == jp && l == lp {
                                        v += xi * xk;
                                    }
                                    if j == jp {
                                        v += xi * yk * h.get(l, lp);
                                    }
                                    if l == lp {
                                        v += yi * xk * h.get(j, jp);
                                    }
                                    v += yi * yk * q.get(j * d + l, jp * d + lp);
                                    if v != 0.0 {
                                        op.set(row, col, op.get(row, col) + v);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ExpectedOperator {
        method,
        matrix: op,
        basis_note: format!(
            "column-stacked covariance of the stacked error state ({m} block(s) of dimension {d}); \
             index (block i, coord j, block k, coord l) maps to (i*{d}+j)*{n} + k*{d}+l"
        ),
    })
}

/// Asymptotic decay classification of an expected operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictedRate {
    Divergent,
    /// Error decays like `exp(-rate * t)`; `rate = -ln(lambda_max)`.
    Rate(f64),
}

impl PredictedRate {
    pub fn rate(&self) -> Option<f64> {
        match self {
            PredictedRate::Divergent => None,
            PredictedRate::Rate(r) => Some(*r),
        }
    }
}

/// Largest eigenvalue magnitude mapped to a decay rate, or `Divergent` when
/// it reaches 1 (within [`DIVERGENCE_TOLERANCE`]).
pub fn predicted_rate(op: &ExpectedOperator) -> Result<PredictedRate, SpectralError> {
    let lambda = max_abs_eigenvalue(&op.matrix)?;
    if lambda >= 1.0 - DIVERGENCE_TOLERANCE {
        Ok(PredictedRate::Divergent)
    } else {
        Ok(PredictedRate::Rate(-lambda.ln()))
    }
}

/// Expected population loss at the requested iterations, by iterating the
/// covariance operator from the deterministic start `w0`.
///
/// `ts` must be non-decreasing. Auxiliary blocks start at `w0`, matching the
/// optimizer initialization.
pub fn expected_loss_trace(
    op: &ExpectedOperator,
    instance: &ProblemInstance,
    w0: &[f64],
    ts: &[u64],
) -> Result<Vec<f64>, SpectralError> {
    let d = instance.dimension();
    if w0.len() != d {
        return Err(SpectralError::InvalidParameter("w0 dimension mismatch".into()));
    }
    if ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(SpectralError::InvalidParameter("ts must be non-decreasing".into()));
    }
    let m = state_blocks(op.method)?;
    let n = m * d;
    if op.matrix.rows() != n * n {
        return Err(SpectralError::InvalidParameter("operator does not match instance".into()));
    }
    let mut e0 = vec![0.0; n];
    for block in 0..m {
        for j in 0..d {
            e0[block * d + j] = w0[j] - instance.w_star()[j];
        }
    }
    // column-stacked covariance of the start state
    let mut phi = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            phi[c * n + r] = e0[r] * e0[c];
        }
    }
    let h = instance.hessian_diag();
    let loss_of = |phi: &[f64]| -> f64 {
        0.5 * (0..d).map(|j| h[j] * phi[j * n + j]).sum::<f64>()
    };
    let mut out = Vec::with_capacity(ts.len());
    let mut t_now = 0u64;
    for &t in ts {
        while t_now < t {
            phi = op.matrix.matvec(&phi)?;
            t_now += 1;
        }
        out.push(loss_of(&phi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{eigenvalues, poly_roots, schur_eigenvalues};
    use crate::problems::MomentMethod;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, x: f64, c: f64) -> HbCoordParams {
        HbCoordParams::new(alpha, x, c).unwrap()
    }

    #[test]
    fn operator_entries_match_formula() {
        let p = params(0.3, 0.5, 2.0);
        let b = hb_expected_operator(&p).matrix;
        let t = 0.8;
        assert!((b.get(0, 0) - (t * t + 0.25)).abs() < 1e-15);
        assert!((b.get(0, 1) + 0.3 * t).abs() < 1e-15);
        assert!((b.get(0, 3) - 0.09).abs() < 1e-15);
        assert_eq!(b.get(1, 0), t);
        assert_eq!(b.get(3, 0), 1.0);
    }

    #[test]
    fn determinant_is_alpha_fourth() {
        let p = params(0.3, 0.5, 2.0);
        let det = hb_expected_operator(&p).matrix.det().unwrap();
        assert!((det - 0.0081).abs() < 1e-12, "det {det}");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = params(rng.gen_range(0.0..1.0), rng.gen_range(0.01..2.0), rng.gen_range(1.0..8.0));
            let det = hb_expected_operator(&p).matrix.det().unwrap();
            let expected = p.alpha.powi(4);
            assert!(
                (det - expected).abs() <= 1e-10 * (1.0 + expected),
                "det {det} vs alpha^4 {expected}"
            );
        }
    }

    #[test]
    fn momentum_free_spectrum_is_scalar_recursion_factor() {
        let p = params(0.0, 0.4, 2.5);
        let eigs = eigenvalues(&hb_expected_operator(&p).matrix).unwrap();
        let t = p.drift();
        let expected = t * t + (p.c - 1.0) * p.x * p.x;
        let mut mags: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(mags[..3].iter().all(|m| *m < 1e-8), "three zero modes");
        assert!((mags[3] - expected).abs() < 1e-10);
    }

    #[test]
    fn characteristic_poly_frozen_coefficients() {
        let p = params(0.3, 0.5, 2.0);
        let d = characteristic_poly(&p);
        let expected = [1.0, -0.89, 0.204, -0.0351, 0.0081];
        for (got, want) in d.coefficients().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn characteristic_poly_roots_equal_operator_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = params(
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..1.5),
                rng.gen_range(1.5..6.0),
            );
            let mut from_poly: Vec<f64> = poly_roots(&characteristic_poly(&p))
                .unwrap()
                .iter()
                .map(|z| z.norm())
                .collect();
            // independent route: QR iteration on the matrix itself
            let mut from_matrix: Vec<f64> = schur_eigenvalues(&hb_expected_operator(&p).matrix)
                .unwrap()
                .iter()
                .map(|z| z.norm())
                .collect();
            from_poly.sort_by(|a, b| a.partial_cmp(b).unwrap());
            from_matrix.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in from_poly.iter().zip(&from_matrix) {
                assert!((a - b).abs() < 1e-7, "spectrum mismatch {a} vs {b}");
            }
        }
    }

    #[test]
    fn characteristic_poly_degenerates_at_zero_momentum() {
        let p = params(0.0, 0.35, 3.0);
        let coeffs = characteristic_poly(&p).coefficients().to_vec();
        assert_eq!(coeffs[2], 0.0);
        assert_eq!(coeffs[3], 0.0);
        assert_eq!(coeffs[4], 0.0);
        let t = p.drift();
        assert!((coeffs[1] + (t * t + (p.c - 1.0) * p.x * p.x)).abs() < 1e-15);
    }

    #[test]
    fn d_at_one_boundary_and_sign() {
        // boundary root by construction: alpha = 0.5, c = 2 puts it at x = 0.75
        let boundary = top_direction_boundary(0.5, 2.0);
        assert!((boundary - 0.75).abs() < 1e-15);
        assert!(eval_d_at_one(&params(0.5, boundary, 2.0)).abs() < 1e-15);
        assert!(eval_d_at_one(&params(0.5, boundary + 0.05, 2.0)) < 0.0);
        assert!(eval_d_at_one(&params(0.5, boundary - 0.05, 2.0)) > 0.0);
    }

    #[test]
    fn d_at_one_matches_polynomial_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = params(
                rng.gen_range(0.0..0.99),
                rng.gen_range(0.01..2.0),
                rng.gen_range(1.0..6.0),
            );
            let direct = characteristic_poly(&p).eval(1.0);
            let closed = eval_d_at_one(&p);
            assert!((direct - closed).abs() < 1e-12 * (1.0 + closed.abs()));
        }
    }

    #[test]
    fn d_sign_equivalence_with_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let alpha = rng.gen_range(0.0..0.999);
            let c = rng.gen_range(2.0..10.0);
            let x = rng.gen_range(1e-3..3.0);
            let boundary = top_direction_boundary(alpha, c);
            if (x - boundary).abs() < 1e-9 {
                continue;
            }
            let d1 = eval_d_at_one(&params(alpha, x, c));
            assert_eq!(d1 <= 0.0, x >= boundary, "alpha {alpha} c {c} x {x}");
        }
    }

    #[test]
    fn g_matches_substituted_characteristic_poly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.0..0.95);
            let c = rng.gen_range(2.1..8.0);
            let kappa = rng.gen_range(20.0..5000.0);
            let ds1 = rng.gen_range(0.01..1.0);
            let ell = rng.gen_range(0.0..9.0);
            let p = params(alpha, 1.0, c);
            let g = eval_g(&p, kappa, ds1, ell);
            let bottom = params(alpha, c * ds1 / kappa, c);
            let direct = characteristic_poly(&bottom).eval(1.0 - ell / kappa);
            assert!(
                (g - direct).abs() <= 1e-9 * (1.0 + direct.abs()),
                "G vs D(1 - l/k): {g} vs {direct}"
            );
        }
    }

    #[test]
    fn g_at_zero_equals_bottom_direction_d_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let alpha = rng.gen_range(0.0..0.95);
            let c = rng.gen_range(2.1..6.0);
            let kappa = rng.gen_range(30.0..1000.0);
            let ds1 = rng.gen_range(0.01..1.0);
            let p = params(alpha, 1.0, c);
            let g0 = eval_g(&p, kappa, ds1, 0.0);
            let bottom = params(alpha, c * ds1 / kappa, c);
            let d1 = eval_d_at_one(&bottom);
            assert!((g0 - d1).abs() <= 1e-12 * (1.0 + d1.abs()), "{g0} vs {d1}");
        }
    }

    #[test]
    fn small_momentum_g_is_non_positive_on_admissible_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 1000 {
            let c = rng.gen_range(2.0001..3000.0);
            let kappa = rng.gen_range(500.0..1e6);
            let alpha = rng.gen_range(0.0..(1.0 - 450.0 / kappa));
            // convergent-regime step size
            let ds1 = rng.gen_range(0.0..1.0) * top_direction_boundary(alpha, c);
            if ds1 <= 0.0 {
                continue;
            }
            let ell = 1.0 + 2.0 * c * ds1 / (1.0 - alpha);
            let p = params(alpha, 1.0, c);
            let g = eval_g(&p, kappa, ds1, ell);
            assert!(g <= 1e-15, "G(l) must be <= 0: got {g} at c={c} kappa={kappa} alpha={alpha}");
            checked += 1;
        }
    }

    #[test]
    fn r_determinant_zero_momentum_and_frozen_point() {
        assert_eq!(r_matrix_determinant(&params(0.0, 0.5, 3.0)).unwrap(), 0.0);
        // alpha=0.3, x=0.5, c=3: hand-expanded value
        let det = r_matrix_determinant(&params(0.3, 0.5, 3.0)).unwrap();
        assert!((det - 0.0525).abs() < 1e-15, "{det}");
        assert!(r_matrix_determinant(&params(0.3, 0.5, 2.0)).is_err(), "c > 2 required");
    }

    #[test]
    fn r_determinant_matches_cofactor_expansion_of_explicit_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = params(
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..1.2),
                rng.gen_range(2.1..8.0),
            );
            let (a, x, c) = (p.alpha, p.x, p.c);
            let t = p.drift();
            // moments of the random drift t_hat = 1 + alpha - delta * a^2:
            // E[t_hat] = t, E[(t_hat - g)^2] = (t - g)^2 + (c - 1) x^2
            let q = |g: f64| (t - g) * (t - g) + (c - 1.0) * x * x;
            let r = [
                [1.0, q(a), q(0.0) * q(a) - 2.0 * a * t * (t - a) + a * a],
                [1.0, t - a, t * q(a) - a * (t - a)],
                [1.0, 1.0, q(a)],
            ];
            let cofactor = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
                - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
            let closed = r_matrix_determinant(&p).unwrap();
            assert!(
                (closed - cofactor).abs() <= 1e-9 * (1.0 + cofactor.abs()),
                "{closed} vs {cofactor}"
            );
        }
    }

    #[test]
    fn r_determinant_nonzero_in_admissible_convergent_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 1000 {
            let c = rng.gen_range(2.5..20.0);
            let kappa = rng.gen_range(4.0 * c..1e5);
            let alpha = rng.gen_range(0.05..0.95);
            let ds1 = rng.gen_range(0.01..1.0) * top_direction_boundary(alpha, c);
            if ds1 <= 0.0 {
                continue;
            }
            for x in [ds1, c * ds1 / kappa] {
                let det = r_matrix_determinant(&params(alpha, x, c)).unwrap();
                assert!(det.abs() > 0.0, "determinant vanished at alpha={alpha} x={x} c={c}");
            }
            checked += 1;
        }
    }

    #[test]
    fn alpha_eigenvector_of_the_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let p = params(
                rng.gen_range(0.05..0.95),
                rng.gen_range(0.05..1.5),
                rng.gen_range(1.5..5.0),
            );
            let b = hb_expected_operator(&p).matrix;
            let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
            let v = [0.0, -inv_sqrt2, inv_sqrt2, 0.0];
            let bv = b.matvec(&v).unwrap();
            for j in 0..4 {
                assert!((bv[j] - p.alpha * v[j]).abs() < 1e-14, "component {j}");
            }
        }
    }

    #[test]
    fn lambda_max_at_least_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = params(
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.01..1.5),
                rng.gen_range(1.0..6.0),
            );
            let lambda = max_abs_eigenvalue(&hb_expected_operator(&p).matrix).unwrap();
            assert!(lambda >= p.alpha - 1e-10, "lambda {lambda} < alpha {}", p.alpha);
        }
    }

    #[test]
    fn expected_operator_matches_monte_carlo_kronecker() {
        // empirical E[A (x) A] from sampled per-coordinate transfer matrices
        let p = params(0.4, 0.3, 2.0);
        let b = hb_expected_operator(&p).matrix;
        // per-coordinate law with sigma^2 chosen so x = delta * sigma^2 at delta = 1:
        // a^2 = c * sigma^2 * z'^2 where z'^2 in {c, 0}... use the two-point law
        // a^2 in {c * x, 0} each with probability 1/c ... for c = 2: {2x, 0} w.p. 1/2
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 1_000_000usize;
        let mut mean = [[0.0f64; 4]; 4];
        let mut mean_sq = [[0.0f64; 4]; 4];
        for _ in 0..n {
            let a_sq = if rng.gen::<f64>() < 0.5 { 2.0 * p.x } else { 0.0 };
            let a11 = 1.0 + p.alpha - a_sq;
            let a_mat = [[a11, -p.alpha], [1.0, 0.0]];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            let v = a_mat[i][j] * a_mat[k][l];
                            mean[2 * i + k][2 * j + l] += v / n as f64;
                            mean_sq[2 * i + k][2 * j + l] += v * v / n as f64;
                        }
                    }
                }
            }
        }
        for r in 0..4 {
            for c in 0..4 {
                let se = ((mean_sq[r][c] - mean[r][c] * mean[r][c]).max(0.0) / n as f64).sqrt();
                assert!(
                    (mean[r][c] - b.get(r, c)).abs() <= 5.0 * se + 1e-9,
                    "entry ({r},{c}): {} vs {}",
                    mean[r][c],
                    b.get(r, c)
                );
            }
        }
    }

    #[test]
    fn stability_verdict_branches() {
        let w = vec![0.6, -0.8];
        let inst = ProblemInstance::scaled_discrete(1.0, 0.125, 2.0, w).unwrap();
        // kappa = 2 / sigma2^2 = 128
        let alpha = 0.5;
        let divergent_delta = top_direction_boundary(alpha, 2.0) * 1.05;
        let v = hb_stability_verdict(alpha, divergent_delta, &inst).unwrap();
        assert_eq!(v.classification, StabilityClass::DivergentTopDirection);
        assert!(v.lambda_max_top >= 1.0);

        // large momentum: lambda_max >= alpha for any step size (needs kappa > 450)
        let inst = ProblemInstance::scaled_discrete(1.0, 0.03125, 2.0, vec![0.6, -0.8]).unwrap();
        let kappa = inst.kappa();
        assert!((kappa - 2048.0).abs() < 1e-9);
        let big_alpha = 1.0 - 450.0 / kappa;
        let v = hb_stability_verdict(big_alpha, 0.1, &inst).unwrap();
        assert!(v.lambda_max >= big_alpha);
        assert!(v.lambda_max >= 1.0 - 500.0 / kappa);
        assert_ne!(v.classification, StabilityClass::Convergent);

        let gauss = ProblemInstance::diagonal_gaussian(16.0, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            hb_stability_verdict(0.5, 0.1, &gauss),
            Err(SpectralError::WrongInstanceKind)
        ));
    }

    #[test]
    fn sgd_operator_with_zero_step_is_identity() {
        let inst = ProblemInstance::scaled_discrete(1.0, 0.5, 2.0, vec![0.6, -0.8]).unwrap();
        let moments = inst.exact_moments();
        let op = covariance_operator(Method::Sgd, &HyperParams::sgd(0.0), &inst, &moments).unwrap();
        assert_eq!(op.matrix, Matrix::identity(4));
    }

    #[test]
    fn hb_operator_block_decouples_to_coordinate_blocks() {
        let inst = ProblemInstance::scaled_discrete(1.0, 0.5, 2.0, vec![0.6, -0.8]).unwrap();
        let hp = HyperParams::momentum(0.2, 0.45);
        let moments = inst.exact_moments();
        let op = covariance_operator(Method::Hb, &hp, &inst, &moments).unwrap();
        let d = 2;
        let n = 4;
        for coord in 0..2 {
            let p = params(hp.alpha, hp.delta * inst.hessian_diag()[coord], 2.0);
            let block = hb_expected_operator(&p).matrix;
            for i in 0..2 {
                for k in 0..2 {
                    for ip in 0..2 {
                        for kp in 0..2 {
                            let row = (i * d + coord) * n + (k * d + coord);
                            let col = (ip * d + coord) * n + (kp * d + coord);
                            let got = op.matrix.get(row, col);
                            let want = block.get(2 * i + k, 2 * ip + kp);
                            assert!(
                                (got - want).abs() < 1e-13,
                                "coord {coord} entry ({i}{k})({ip}{kp}): {got} vs {want}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sgd_predicted_inverse_rate_tracks_kappa() {
        // at delta = 1/(c sigma_1^2) the inverse rate stays within a factor
        // two of kappa
        for exp in 4..=10 {
            let kappa = f64::from(1u32 << exp);
            let c = 2.0;
            let sigma2 = (c / kappa).sqrt();
            let inst =
                ProblemInstance::scaled_discrete(1.0, sigma2, c, vec![0.6, -0.8]).unwrap();
            let hp = HyperParams::sgd(1.0 / (c * 1.0));
            let op = covariance_operator(Method::Sgd, &hp, &inst, &inst.exact_moments()).unwrap();
            match predicted_rate(&op).unwrap() {
                PredictedRate::Rate(r) => {
                    let inv = 1.0 / r;
                    assert!(
                        inv >= kappa / 2.0 && inv <= 2.0 * kappa,
                        "kappa {kappa}: 1/rate {inv}"
                    );
                }
                PredictedRate::Divergent => panic!("sgd at the reference step must converge"),
            }
        }
    }

    #[test]
    fn predicted_rate_diagonal_case() {
        let op = ExpectedOperator {
            method: Method::Sgd,
            matrix: Matrix::diagonal(&[0.99, 0.5]),
            basis_note: String::new(),
        };
        match predicted_rate(&op).unwrap() {
            PredictedRate::Rate(r) => assert!((r + 0.99f64.ln()).abs() < 1e-12),
            _ => panic!("convergent"),
        }
        let op = ExpectedOperator {
            method: Method::Sgd,
            matrix: Matrix::diagonal(&[1.0, 0.5]),
            basis_note: String::new(),
        };
        assert_eq!(predicted_rate(&op).unwrap(), PredictedRate::Divergent);
    }

    #[test]
    fn operator_loss_trace_matches_monte_carlo_for_sgd() {
        use crate::optimizers::{step, OptimizerState};
        let inst = ProblemInstance::scaled_discrete(1.0, 0.5, 2.0, vec![0.6, -0.8]).unwrap();
        let hp = HyperParams::sgd(0.25);
        let op = covariance_operator(Method::Sgd, &hp, &inst, &inst.exact_moments()).unwrap();
        let w0 = vec![0.0, 0.0];
        let predicted = expected_loss_trace(&op, &inst, &w0, &[10, 50]).unwrap();
        let trials = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut sums = [0.0f64; 2];
        let mut sums_sq = [0.0f64; 2];
        for _ in 0..trials {
            let mut state = OptimizerState::init(Method::Sgd, &w0);
            let mut losses = [0.0f64; 2];
            for t in 1..=50 {
                let s = inst.sample(&mut rng);
                step(&mut state, &inst, &s, &hp).unwrap();
                if t == 10 {
                    losses[0] = inst.population_loss(state.iterate()).unwrap();
                }
            }
            losses[1] = inst.population_loss(state.iterate()).unwrap();
            for k in 0..2 {
                sums[k] += losses[k];
                sums_sq[k] += losses[k] * losses[k];
            }
        }
        for k in 0..2 {
            let mean = sums[k] / trials as f64;
            let var = (sums_sq[k] / trials as f64 - mean * mean).max(0.0);
            let se = (var / trials as f64).sqrt();
            assert!(
                (mean - predicted[k]).abs() <= 5.0 * se,
                "t index {k}: mc {mean} vs predicted {}",
                predicted[k]
            );
        }
    }

    #[test]
    fn empirical_moments_give_nearby_operator() {
        let inst = ProblemInstance::diagonal_gaussian(16.0, vec![0.6, -0.8]).unwrap();
        let hp = HyperParams::sgd(1.0 / 3.0);
        let exact = covariance_operator(Method::Sgd, &hp, &inst, &inst.exact_moments()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let moments = inst
            .fourth_moment_operator(MomentMethod::Empirical { samples: 200_000 }, &mut rng)
            .unwrap();
        let emp = covariance_operator(Method::Sgd, &hp, &inst, &moments).unwrap();
        let le = max_abs_eigenvalue(&exact.matrix).unwrap();
        let lm = max_abs_eigenvalue(&emp.matrix).unwrap();
        assert!((le - lm).abs() < 0.02, "{le} vs {lm}");
    }

    #[test]
    fn asgd_admits_settings_beating_the_inverse_sqrt_threshold() {
        // in contrast to heavy ball, the accelerated method has settings
        // with lambda_max <= 1 - 1/(10 sqrt(kappa * kappa_tilde))
        use crate::optimizers::asgd_hyperparams_from_reference;
        for exp in [4u32, 6, 8, 10] {
            let kappa = f64::from(1u32 << exp);
            let sigma2 = (2.0 / kappa).sqrt();
            let inst =
                ProblemInstance::scaled_discrete(1.0, sigma2, 2.0, vec![0.6, -0.8]).unwrap();
            let hp = asgd_hyperparams_from_reference(
                inst.kappa(),
                inst.kappa_tilde(),
                inst.hessian_diag()[1],
                inst.kappa() * inst.hessian_diag()[1],
                0.7,
            )
            .unwrap();
            let op =
                covariance_operator(Method::Asgd, &hp, &inst, &inst.exact_moments()).unwrap();
            let lambda = max_abs_eigenvalue(&op.matrix).unwrap();
            let threshold = 1.0 - 0.1 / (inst.kappa() * inst.kappa_tilde()).sqrt();
            assert!(
                lambda <= threshold,
                "kappa {kappa}: lambda {lambda} above threshold {threshold}"
            );
        }
    }

    #[test]
    fn asgd_reference_operator_unsupported() {
        let inst = ProblemInstance::scaled_discrete(1.0, 0.5, 2.0, vec![0.6, -0.8]).unwrap();
        let hp = HyperParams::asgd(0.1, 16.0, 2.0);
        assert!(matches!(
            covariance_operator(Method::AsgdReference, &hp, &inst, &inst.exact_moments()),
            Err(SpectralError::UnsupportedMethod)
        ));
    }
}
