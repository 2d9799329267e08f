//! Streaming realizable least-squares problems.
//!
//! Every instance is a distribution over covariates `a` with a fixed target
//! vector `w*` and labels `b = <w*, a>` (realizable: the population minimum
//! is zero and every per-sample gradient vanishes at `w*`). The Hessian
//! `H = E[a a^T]` is diagonal for all supported kinds, and both the second
//! and fourth moments are available in closed form, which is what makes the
//! exact covariance-operator analysis in [`crate::spectral`] possible.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{kron, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Which covariate law an instance follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    /// Two-direction discrete law `a = sigma_j * z * e_j` (j = 1, 2 each with
    /// probability 1/2) where z has E[z^2] = 2 and E[z^4] = 2c.
    ScaledDiscrete,
    /// Two-point law `a = e_1` or `a = (2/kappa_param) e_2`, each with
    /// probability 1/2.
    TwoPointDiscrete,
    /// Centered Gaussian with covariance diag(1, 1/kappa_param).
    DiagonalGaussian,
    /// d-dimensional generalization of the two-direction discrete law.
    CustomDiagonal,
}

/// A single labelled observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub a: Vec<f64>,
    pub b: f64,
}

/// How fourth moments are obtained when building covariance operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    /// Closed-form moments of the covariate law.
    Exact,
    /// Plug-in estimate from i.i.d. samples.
    Empirical { samples: usize },
}

/// Second and fourth moments of a covariate law.
///
/// `fourth_moment` is the d^2 x d^2 matrix of the linear map
/// `M -> E[<a, M a> a a^T]` in the Kronecker basis, i.e. `E[(aa^T) (x) (aa^T)]`.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub hessian: Matrix,
    pub fourth_moment: Matrix,
}

impl MomentSet {
    /// Applies the fourth-moment map to a d x d matrix (test oracle surface).
    pub fn apply_fourth(&self, m: &Matrix) -> Matrix {
        let d = self.hessian.rows();
        let mut vec_m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                vec_m[i * d + j] = m.get(i, j);
            }
        }
        let out = self.fourth_moment.matvec(&vec_m).expect("shape fixed by construction");
        Matrix::from_fn(d, d, |i, j| out[i * d + j])
    }
}

/// A streaming least-squares instance: covariate law, target, and the
/// condition numbers that govern achievable rates.
///
/// `kappa` is the computational condition number (for the two-direction
/// discrete law, `c * sigma_1^2 / sigma_2^2`; for the two-point and Gaussian
/// laws, `lambda_max(H) / lambda_min(H)`). `kappa_tilde` is the statistical
/// condition number, a constant for every law here.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    kind: ProblemKind,
    dimension: usize,
    w_star: Vec<f64>,
    /// Per-direction scale parameters. Semantics depend on the kind:
    /// z-multipliers for the discrete laws, atom magnitudes for the two-point
    /// law, standard deviations for the Gaussian.
    sigma: Vec<f64>,
    kurtosis_c: f64,
    kappa: f64,
    kappa_tilde: f64,
    hessian_diag: Vec<f64>,
}

fn validate_w_star(w_star: &[f64], dimension: usize) -> Result<(), ProblemError> {
    if w_star.len() != dimension {
        return Err(ProblemError::DimensionMismatch { expected: dimension, got: w_star.len() });
    }
    if w_star.iter().any(|v| !v.is_finite()) {
        return Err(ProblemError::InvalidParameter("w_star must be finite".into()));
    }
    Ok(())
}

impl ProblemInstance {
    /// Two-direction discrete law with scales `sigma_1 > sigma_2 > 0` and
    /// kurtosis parameter `c >= 2`.
    ///
    /// The multiplier z takes values +-sqrt(c) with probability 1/c each and
    /// 0 otherwise, which realizes E[z^2] = 2 and E[z^4] = 2c (for c = 2 this
    /// degenerates to the symmetric two-point law on +-sqrt(2)). Direction
    /// moments are E[(a^(j))^2] = sigma_j^2 and E[(a^(j))^4] = c sigma_j^4,
    /// so kappa = c sigma_1^2 / sigma_2^2 and kappa_tilde = c.
    pub fn scaled_discrete(
        sigma1: f64,
        sigma2: f64,
        c: f64,
        w_star: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        if !(sigma1 > sigma2 && sigma2 > 0.0) {
            return Err(ProblemError::InvalidParameter(
                "require sigma1 > sigma2 > 0".into(),
            ));
        }
        if !(c >= 2.0) {
            return Err(ProblemError::InvalidParameter("require c >= 2".into()));
        }
        validate_w_star(&w_star, 2)?;
        Ok(Self {
            kind: ProblemKind::ScaledDiscrete,
            dimension: 2,
            w_star,
            sigma: vec![sigma1, sigma2],
            kurtosis_c: c,
            kappa: c * sigma1 * sigma1 / (sigma2 * sigma2),
            kappa_tilde: c,
            hessian_diag: vec![sigma1 * sigma1, sigma2 * sigma2],
        })
    }

    /// Two-point law `a = e_1` w.p. 1/2 and `a = (2/kappa_param) e_2` w.p. 1/2.
    ///
    /// The Hessian is diag(1/2, 2/kappa_param^2), so the stored `kappa` is
    /// lambda_max/lambda_min = kappa_param^2/4. The per-direction kurtosis is
    /// c = 2 (each direction is hit with probability 1/2).
    pub fn two_point_discrete(kappa_param: f64, w_star: Vec<f64>) -> Result<Self, ProblemError> {
        if !(kappa_param >= 2.0) {
            return Err(ProblemError::InvalidParameter(
                "require kappa_param >= 2 so directions stay ordered".into(),
            ));
        }
        validate_w_star(&w_star, 2)?;
        let m2 = 2.0 / kappa_param;
        Ok(Self {
            kind: ProblemKind::TwoPointDiscrete,
            dimension: 2,
            w_star,
            sigma: vec![1.0, m2],
            kurtosis_c: 2.0,
            kappa: kappa_param * kappa_param / 4.0,
            kappa_tilde: 2.0,
            hessian_diag: vec![0.5, 0.5 * m2 * m2],
        })
    }

    /// Two-point law constructed to hit a target condition number
    /// `lambda_max(H)/lambda_min(H) = target` exactly (kappa_param = 2 sqrt(target)).
    pub fn two_point_with_condition(
        target: f64,
        w_star: Vec<f64>,
    ) -> Result<Self, ProblemError> {
        if !(target >= 1.0) {
            return Err(ProblemError::InvalidParameter("condition number must be >= 1".into()));
        }
        Self::two_point_discrete(2.0 * target.sqrt(), w_star)
    }

    /// Centered Gaussian covariates with covariance diag(1, 1/kappa_param).
    ///
    /// `kappa` is lambda_max/lambda_min = kappa_param; `kappa_tilde` is the
    /// Gaussian statistical condition number (tr(H) + 2 lambda_max)/lambda_max.
    pub fn diagonal_gaussian(kappa_param: f64, w_star: Vec<f64>) -> Result<Self, ProblemError> {
        if !(kappa_param >= 1.0) {
            return Err(ProblemError::InvalidParameter("require kappa_param >= 1".into()));
        }
        validate_w_star(&w_star, 2)?;
        Ok(Self {
            kind: ProblemKind::DiagonalGaussian,
            dimension: 2,
            w_star,
            sigma: vec![1.0, (1.0 / kappa_param).sqrt()],
            kurtosis_c: 3.0,
            kappa: kappa_param,
            kappa_tilde: 3.0 + 1.0 / kappa_param,
            hessian_diag: vec![1.0, 1.0 / kappa_param],
        })
    }

    /// d-dimensional discrete law: axis j is chosen with probability 1/d and
    /// `a = sigma_j * z * e_j` with z in {+-sqrt(c), 0}, P(z = +-sqrt(c)) = d/(2c).
    ///
    /// Requires c >= d so the probabilities are valid; marginal moments match
    /// the two-direction law (E[(a^(j))^2] = sigma_j^2, E[(a^(j))^4] = c sigma_j^4).
    pub fn custom_diagonal(sigma: Vec<f64>, c: f64, w_star: Vec<f64>) -> Result<Self, ProblemError> {
        let d = sigma.len();
        if d == 0 {
            return Err(ProblemError::InvalidParameter("need at least one direction".into()));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(ProblemError::InvalidParameter("scales must be positive".into()));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(ProblemError::InvalidParameter("scales must be non-increasing".into()));
        }
        if !(c >= 2.0) || c < d as f64 {
            return Err(ProblemError::InvalidParameter(
                "require c >= max(2, dimension)".into(),
            ));
        }
        validate_w_star(&w_star, d)?;
        let kappa = c * sigma[0] * sigma[0] / (sigma[d - 1] * sigma[d - 1]);
        Ok(Self {
            kind: ProblemKind::CustomDiagonal,
            dimension: d,
            hessian_diag: sigma.iter().map(|s| s * s).collect(),
            w_star,
            sigma,
            kurtosis_c: c,
            kappa,
            kappa_tilde: c,
        })
    }

    /// Draws a target uniformly on the unit sphere.
    pub fn random_w_star(dimension: usize, rng: &mut impl Rng) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = Vec::with_capacity(dimension);
            while v.len() < dimension {
                let u1: f64 = rng.gen();
                let u2: f64 = rng.gen();
                let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                let th = 2.0 * std::f64::consts::PI * u2;
                v.push(r * th.cos());
                if v.len() < dimension {
                    v.push(r * th.sin());
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-9 {
                return v.iter().map(|x| x / norm).collect();
            }
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn kurtosis_c(&self) -> f64 {
        self.kurtosis_c
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_tilde(&self) -> f64 {
        self.kappa_tilde
    }

    /// Diagonal of the Hessian H = E[a a^T].
    pub fn hessian_diag(&self) -> &[f64] {
        &self.hessian_diag
    }

    /// Uniform draws consumed by one call to [`Self::sample`]: 1 for the
    /// two-point law, 2 for every other kind.
    pub fn uniforms_per_sample(&self) -> usize {
        match self.kind {
            ProblemKind::TwoPointDiscrete => 1,
            _ => 2,
        }
    }

    /// Draws a covariate into `a` and returns the label `b = <w*, a>`.
    pub fn sample_into(&self, rng: &mut impl Rng, a: &mut [f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dimension);
        match self.kind {
            ProblemKind::TwoPointDiscrete => self.sample_from_uniforms(rng.gen(), 0.0, a),
            _ => {
                let u1: f64 = rng.gen();
                let u2: f64 = rng.gen();
                self.sample_from_uniforms(u1, u2, a)
            }
        }
    }

    /// Deterministic sampling core: maps uniforms in [0,1) to a covariate.
    ///
    /// Discrete kinds use `u1` for the axis and `u2` for the z-multiplier
    /// (ignored by the two-point law); the Gaussian law uses a Box-Muller
    /// transform of `(u1, u2)`. Exposed so tests can force branches.
    pub fn sample_from_uniforms(&self, u1: f64, u2: f64, a: &mut [f64]) -> f64 {
        a.iter_mut().for_each(|x| *x = 0.0);
        match self.kind {
            ProblemKind::TwoPointDiscrete => {
                let j = usize::from(u1 >= 0.5);
                a[j] = self.sigma[j];
            }
            ProblemKind::ScaledDiscrete | ProblemKind::CustomDiagonal => {
                let d = self.dimension as f64;
                let j = ((u1 * d) as usize).min(self.dimension - 1);
                let s = self.kurtosis_c.sqrt();
                let p_half = d / (2.0 * self.kurtosis_c);
                let z = if u2 < p_half {
                    s
                } else if u2 < 2.0 * p_half {
                    -s
                } else {
                    0.0
                };
                a[j] = self.sigma[j] * z;
            }
            ProblemKind::DiagonalGaussian => {
                let r = (-2.0 * (1.0 - u1).ln()).sqrt();
                let th = 2.0 * std::f64::consts::PI * u2;
                a[0] = self.sigma[0] * r * th.cos();
                a[1] = self.sigma[1] * r * th.sin();
            }
        }
        self.w_star.iter().zip(a.iter()).map(|(w, x)| w * x).sum()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Sample {
        let mut a = vec![0.0; self.dimension];
        let b = self.sample_into(rng, &mut a);
        Sample { a, b }
    }

    /// Single-sample gradient `-(b - <w, a>) a` of `0.5 (b - <w, a>)^2`.
    pub fn stochastic_gradient(&self, w: &[f64], s: &Sample) -> Result<Vec<f64>, ProblemError> {
        if w.len() != self.dimension || s.a.len() != self.dimension {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dimension,
                got: w.len().max(s.a.len()),
            });
        }
        let residual = s.b - w.iter().zip(&s.a).map(|(x, y)| x * y).sum::<f64>();
        Ok(s.a.iter().map(|ai| -residual * ai).collect())
    }

    /// Closed-form population loss `0.5 (w - w*)^T H (w - w*)`.
    pub fn population_loss(&self, w: &[f64]) -> Result<f64, ProblemError> {
        if w.len() != self.dimension {
            return Err(ProblemError::DimensionMismatch { expected: self.dimension, got: w.len() });
        }
        let mut acc = 0.0;
        for j in 0..self.dimension {
            let e = w[j] - self.w_star[j];
            acc += self.hessian_diag[j] * e * e;
        }
        Ok(0.5 * acc)
    }

    /// Atom decomposition `(probability, a)` for the discrete kinds; `None`
    /// for the Gaussian law.
    pub fn atoms(&self) -> Option<Vec<(f64, Vec<f64>)>> {
        match self.kind {
            ProblemKind::TwoPointDiscrete => Some(vec![
                (0.5, vec![self.sigma[0], 0.0]),
                (0.5, vec![0.0, self.sigma[1]]),
            ]),
            ProblemKind::ScaledDiscrete | ProblemKind::CustomDiagonal => {
                let d = self.dimension;
                let s = self.kurtosis_c.sqrt();
                let p_half = d as f64 / (2.0 * self.kurtosis_c);
                let p_axis = 1.0 / d as f64;
                let p_zero = 1.0 - 2.0 * p_half;
                let mut atoms = Vec::new();
                for j in 0..d {
                    for z in [s, -s] {
                        let mut a = vec![0.0; d];
                        a[j] = self.sigma[j] * z;
                        atoms.push((p_axis * p_half, a));
                    }
                }
                if p_zero > 1e-15 {
                    atoms.push((p_zero, vec![0.0; d]));
                }
                Some(atoms)
            }
            ProblemKind::DiagonalGaussian => None,
        }
    }

    /// Exact moments of the covariate law.
    pub fn exact_moments(&self) -> MomentSet {
        let d = self.dimension;
        match self.atoms() {
            Some(atoms) => {
                let mut hessian = Matrix::zeros(d, d);
                let mut fourth = Matrix::zeros(d * d, d * d);
                for (p, a) in &atoms {
                    let outer = Matrix::from_fn(d, d, |i, j| a[i] * a[j]);
                    hessian = hessian.add(&outer.scale(*p)).expect("same shape");
                    fourth = fourth.add(&kron(&outer, &outer).scale(*p)).expect("same shape");
                }
                MomentSet { hessian, fourth_moment: fourth }
            }
            None => {
                // Gaussian: E[a_i a_j a_k a_l] = S_ij S_kl + S_ik S_jl + S_il S_jk
                let cov = &self.hessian_diag;
                let sig = |i: usize, j: usize| if i == j { cov[i] } else { 0.0 };
                let hessian = Matrix::diagonal(cov);
                let fourth = Matrix::from_fn(d * d, d * d, |row, col| {
                    let (i, k) = (row / d, row % d);
                    let (j, l) = (col / d, col % d);
                    sig(i, j) * sig(k, l) + sig(i, k) * sig(j, l) + sig(i, l) * sig(j, k)
                });
                MomentSet { hessian, fourth_moment: fourth }
            }
        }
    }

    /// Plug-in moment estimates from `n` i.i.d. samples.
    pub fn empirical_moments(&self, n: usize, rng: &mut impl Rng) -> Result<MomentSet, ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidParameter("need at least one sample".into()));
        }
        let d = self.dimension;
        let mut hessian = Matrix::zeros(d, d);
        let mut fourth = Matrix::zeros(d * d, d * d);
        let mut a = vec![0.0; d];
        let w = 1.0 / n as f64;
        for _ in 0..n {
            self.sample_into(rng, &mut a);
            for i in 0..d {
                for j in 0..d {
                    hessian.set(i, j, hessian.get(i, j) + w * a[i] * a[j]);
                }
            }
            for i in 0..d {
                for k in 0..d {
                    let row = i * d + k;
                    for j in 0..d {
                        for l in 0..d {
                            let col = j * d + l;
                            fourth.set(row, col, fourth.get(row, col) + w * a[i] * a[j] * a[k] * a[l]);
                        }
                    }
                }
            }
        }
        Ok(MomentSet { hessian, fourth_moment: fourth })
    }

    /// Moments via the requested method. `Exact` does not consume randomness.
    pub fn fourth_moment_operator(
        &self,
        method: MomentMethod,
        rng: &mut impl Rng,
    ) -> Result<MomentSet, ProblemError> {
        match method {
            MomentMethod::Exact => Ok(self.exact_moments()),
            MomentMethod::Empirical { samples } => self.empirical_moments(samples, rng),
        }
    }
}
