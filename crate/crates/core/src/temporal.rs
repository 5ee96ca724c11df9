//! The temporal eigenproblem `T' + (lambda + mu) t^k T = 0`, `T(0) = alpha T(1)`.
//!
//! Nontrivial solutions exist when `exp((lambda + mu)/(k+1)) = alpha`, which
//! gives `lambda_re = -mu + (k+1)/2 ln|alpha|^2` and
//! `lambda_im = (k+1)(arg alpha + s pi)`, with eigenfunction
//! `T(t) = C exp([-ln|alpha| - i(arg alpha + s pi)] t^{k+1})`.
//!
//! Evaluating that eigenfunction gives `alpha T(1) = (-1)^s C`, so only even
//! shifts meet the nonlocal condition. [`admissible_shifts`] reports which
//! shifts actually pass instead of trusting the formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Defect threshold `|T(0) - alpha T(1)|` below which a shift is admissible.
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemporalError {
    #[error("nonlocal coefficient must satisfy re^2 + im^2 != 0")]
    ZeroCoefficient,
    #[error("nonlocal coefficient ({0}, {1}) is not finite")]
    NonFiniteCoefficient(f64, f64),
    #[error("temporal exponent k = {0} must be finite and nonnegative")]
    InvalidExponent(f64),
    #[error("separation constant mu = {0} must be finite and nonnegative")]
    InvalidSeparation(f64),
    #[error("arctan(im/re) is undefined for a coefficient with zero real part")]
    UndefinedArctan,
    #[error("temporal factor evaluated at {0}, outside [0, 1]")]
    OutOfDomain(f64),
}

/// A complex coefficient `re + i im` of a nonlocal condition; never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlocalCoefficient {
    pub re: f64,
    pub im: f64,
}

impl NonlocalCoefficient {
    pub fn new(re: f64, im: f64) -> Result<Self, TemporalError> {
        if !re.is_finite() || !im.is_finite() {
            return Err(TemporalError::NonFiniteCoefficient(re, im));
        }
        if re * re + im * im == 0.0 {
            return Err(TemporalError::ZeroCoefficient);
        }
        Ok(Self { re, im })
    }

    pub fn real(re: f64) -> Result<Self, TemporalError> {
        Self::new(re, 0.0)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus_squared(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    /// `ln sqrt(re^2 + im^2)`.
    pub fn log_modulus(self) -> f64 {
        0.5 * self.modulus_squared().ln()
    }

    /// Two-argument angle in `(-pi, pi]`.
    pub fn principal_angle(self) -> f64 {
        self.im.atan2(self.re)
    }

    /// `arctan(im/re)`, undefined when `re = 0`.
    pub fn arctan_angle(self) -> Option<f64> {
        (self.re != 0.0).then(|| (self.im / self.re).atan())
    }

    pub fn angle(self, branch: AngleBranch) -> Result<f64, TemporalError> {
        match branch {
            AngleBranch::Principal => Ok(self.principal_angle()),
            AngleBranch::Arctan => self.arctan_angle().ok_or(TemporalError::UndefinedArctan),
        }
    }
}

/// Convention for the angle of a nonlocal coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum AngleBranch {
    /// `atan2(im, re)` in `(-pi, pi]`.
    #[default]
    Principal,
    /// The one-argument `arctan(im/re)`, which differs from the principal
    /// angle by `pi` when `re < 0`.
    Arctan,
}

/// One temporal mode with its spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalMode {
    pub alpha: NonlocalCoefficient,
    pub k: f64,
    pub mu_lp: f64,
    pub s: u32,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub amplitude: f64,
    pub branch: AngleBranch,
    /// Angle actually used for `lambda_im`.
    pub angle: f64,
    /// `arctan(im/re)` for comparison; `None` when `re = 0`.
    pub arctan_angle: Option<f64>,
}

fn check_k(k: f64) -> Result<(), TemporalError> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(TemporalError::InvalidExponent(k))
    }
}

/// Spectral parameter for shift `s` with the principal angle branch.
pub fn lambda_parameters(
    alpha: NonlocalCoefficient,
    k: f64,
    mu_lp: f64,
    s: u32,
) -> Result<TemporalMode, TemporalError> {
    lambda_parameters_with_branch(alpha, k, mu_lp, s, AngleBranch::Principal)
}

pub fn lambda_parameters_with_branch(
    alpha: NonlocalCoefficient,
    k: f64,
    mu_lp: f64,
    s: u32,
    branch: AngleBranch,
) -> Result<TemporalMode, TemporalError> {
    check_k(k)?;
    if !(mu_lp.is_finite() && mu_lp >= 0.0) {
        return Err(TemporalError::InvalidSeparation(mu_lp));
    }
    let angle = alpha.angle(branch)?;
    let kp1 = k + 1.0;
    Ok(TemporalMode {
        alpha,
        k,
        mu_lp,
        s,
        lambda_re: -mu_lp + 0.5 * kp1 * alpha.modulus_squared().ln(),
        lambda_im: kp1 * (angle + s as f64 * PI),
        amplitude: 1.0,
        branch,
        angle,
        arctan_angle: alpha.arctan_angle(),
    })
}

impl TemporalMode {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda_re, self.lambda_im)
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    /// `-ln|alpha| - i(angle + s pi)`, the coefficient of `t^{k+1}`.
    pub fn exponent_coefficient(&self) -> Complex64 {
        Complex64::new(
            -self.alpha.log_modulus(),
            -(self.angle + self.s as f64 * PI),
        )
    }

    /// Temporal eigenfunction evaluator.
    pub fn eigenfunction(&self) -> ExponentialFactor {
        ExponentialFactor {
            coefficient: self.exponent_coefficient(),
            power: self.k + 1.0,
            amplitude: self.amplitude,
        }
    }

    /// `|T(0) - alpha T(1)|` for this mode's eigenfunction.
    pub fn nonlocal_defect(&self) -> f64 {
        let f = self.eigenfunction();
        (f.value_unchecked(0.0) - self.alpha.to_complex() * f.value_unchecked(1.0)).norm()
    }
}

/// Evaluator for the temporal factor of a mode.
pub fn temporal_eigenfunction(mode: &TemporalMode) -> ExponentialFactor {
    mode.eigenfunction()
}

/// Value and derivatives of a complex function of one real variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexJet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// `C exp(c s^p)` on `[0, 1]`, the shape of every temporal factor and of the
/// `y`-factor in the two-condition problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFactor {
    pub coefficient: Complex64,
    pub power: f64,
    pub amplitude: f64,
}

impl ExponentialFactor {
    fn value_unchecked(&self, s: f64) -> Complex64 {
        self.amplitude * (self.coefficient * s.powf(self.power)).exp()
    }

    pub fn value(&self, s: f64) -> Result<Complex64, TemporalError> {
        check_unit(s)?;
        Ok(self.value_unchecked(s))
    }

    /// `(T, T')`. `T'(0) = 0` exactly whenever the power exceeds 1.
    pub fn eval(&self, s: f64) -> Result<(Complex64, Complex64), TemporalError> {
        let jet = self.jet(s)?;
        Ok((jet.value, jet.d1))
    }

    pub fn jet(&self, s: f64) -> Result<ComplexJet, TemporalError> {
        check_unit(s)?;
        let p = self.power;
        let c = self.coefficient;
        let value = self.value_unchecked(s);
        // s^{p-1} and s^{p-2} at s = 0 follow the limits of the power laws.
        let pow_m1 = power_or_limit(s, p - 1.0);
        let pow_m2 = power_or_limit(s, p - 2.0);
        let log_d1 = c * p * pow_m1;
        let log_d2 = c * p * (p - 1.0) * pow_m2;
        Ok(ComplexJet {
            value,
            d1: value * log_d1,
            d2: value * (log_d2 + log_d1 * log_d1),
        })
    }
}

fn power_or_limit(s: f64, exponent: f64) -> f64 {
    if s == 0.0 {
        if exponent > 0.0 {
            0.0
        } else if exponent == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        s.powf(exponent)
    }
}

fn check_unit(s: f64) -> Result<(), TemporalError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(TemporalError::OutOfDomain(s))
    }
}

/// Residuals of the two real equations
/// `re/|alpha|^2 = exp(-(lambda_re + mu)/(k+1)) cos(lambda_im/(k+1))` and
/// `im/|alpha|^2 = exp(-(lambda_re + mu)/(k+1)) sin(lambda_im/(k+1))`.
pub fn existence_system_check(mode: &TemporalMode) -> (f64, f64) {
    let kp1 = mode.k + 1.0;
    let m2 = mode.alpha.modulus_squared();
    let decay = (-(mode.lambda_re + mode.mu_lp) / kp1).exp();
    let phase = mode.lambda_im / kp1;
    (
        (mode.alpha.re / m2 - decay * phase.cos()).abs(),
        (mode.alpha.im / m2 - decay * phase.sin()).abs(),
    )
}

/// Shifts `s <= s_max` whose eigenfunction satisfies `T(0) = alpha T(1)` to
/// [`ADMISSIBILITY_TOLERANCE`], using the principal angle.
pub fn admissible_shifts(
    alpha: NonlocalCoefficient,
    k: f64,
    s_max: u32,
) -> Result<Vec<u32>, TemporalError> {
    admissible_shifts_with_branch(alpha, k, s_max, AngleBranch::Principal)
}

pub fn admissible_shifts_with_branch(
    alpha: NonlocalCoefficient,
    k: f64,
    s_max: u32,
    branch: AngleBranch,
) -> Result<Vec<u32>, TemporalError> {
    let mut out = Vec::new();
    for s in 0..=s_max {
        // The spectral shift does not enter T, so any separation constant will do.
        let mode = lambda_parameters_with_branch(alpha, k, 0.0, s, branch)?;
        if mode.nonlocal_defect() < ADMISSIBILITY_TOLERANCE {
            out.push(s);
        }
    }
    Ok(out)
}

/// Whether shift `s` passes [`admissible_shifts`].
pub fn is_admissible(alpha: NonlocalCoefficient, k: f64, s: u32) -> Result<bool, TemporalError> {
    Ok(lambda_parameters(alpha, k, 0.0, s)?.nonlocal_defect() < ADMISSIBILITY_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(re: f64, im: f64) -> NonlocalCoefficient {
        NonlocalCoefficient::new(re, im).unwrap()
    }

    #[test]
    fn unit_coefficient() {
        let m = lambda_parameters(a(1.0, 0.0), 1.0, PI * PI, 2).unwrap();
        assert_eq!(m.lambda_re, -PI * PI);
        assert!((m.lambda_im - 4.0 * PI).abs() < 1e-15);
        let (r1, r2) = existence_system_check(&m);
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn decaying_coefficient() {
        let m = lambda_parameters(a((-1.0f64).exp(), 0.0), 0.0, PI * PI, 0).unwrap();
        assert!((m.lambda_re - (-PI * PI - 1.0)).abs() < 1e-12);
        assert_eq!(m.lambda_im, 0.0);
        let m = lambda_parameters(a(0.5, 0.0), 1.0, PI * PI, 2).unwrap();
        assert!((m.lambda_re - (-PI * PI + 0.25f64.ln())).abs() < 1e-12);
        assert!((m.lambda_im - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn zero_coefficient_rejected() {
        assert_eq!(
            NonlocalCoefficient::new(0.0, 0.0),
            Err(TemporalError::ZeroCoefficient)
        );
        assert!(NonlocalCoefficient::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn perturbed_lambda_breaks_existence_system() {
        let k = 1.0;
        let mut m = lambda_parameters(a(1.0, 0.0), k, PI * PI, 2).unwrap();
        m.lambda_re += 0.1;
        let (r1, _) = existence_system_check(&m);
        let expected = (1.0 - (-0.1 / (k + 1.0)).exp()) * (m.lambda_im / (k + 1.0)).cos().abs();
        assert!(r1 > 0.0);
        assert!((r1 - expected).abs() < 1e-14);
    }

    #[test]
    fn imaginary_coefficient_branches() {
        let alpha = a(0.0, 1.0);
        assert_eq!(alpha.arctan_angle(), None);
        assert!(matches!(
            lambda_parameters_with_branch(alpha, 1.0, 1.0, 0, AngleBranch::Arctan),
            Err(TemporalError::UndefinedArctan)
        ));
        for s in 0..4 {
            let m = lambda_parameters(alpha, 1.0, 1.0, s).unwrap();
            let (r1, r2) = existence_system_check(&m);
            if s % 2 == 0 {
                assert!(r1 < 1e-12 && r2 < 1e-12);
            } else {
                assert!(r2 > 1.0);
            }
        }
    }

    #[test]
    fn eigenfunction_endpoints() {
        let m = lambda_parameters(a(0.5, 0.0), 1.0, 3.0, 2).unwrap();
        let f = m.eigenfunction();
        let (t0, d0) = f.eval(0.0).unwrap();
        assert_eq!(t0, Complex64::new(1.0, 0.0));
        assert_eq!(d0, Complex64::new(0.0, 0.0));
        let t1 = f.value(1.0).unwrap();
        assert!((t0 - Complex64::new(0.5, 0.0) * t1).norm() < 1e-12);
        assert!(f.value(1.5).is_err());
    }

    #[test]
    fn shift_parity() {
        assert_eq!(
            admissible_shifts(a(0.5, 0.0), 1.0, 6).unwrap(),
            vec![0, 2, 4, 6]
        );
        assert_eq!(
            admissible_shifts(a(1.0, 0.0), 1.0, 4).unwrap(),
            vec![0, 2, 4]
        );
        // With the principal angle, arg(-0.5) = pi and the factor (-1)^s is
        // unchanged; the arctan convention drops that pi and flips parity.
        assert_eq!(
            admissible_shifts(a(-0.5, 0.0), 1.0, 6).unwrap(),
            vec![0, 2, 4, 6]
        );
        assert_eq!(
            admissible_shifts_with_branch(a(-0.5, 0.0), 1.0, 6, AngleBranch::Arctan).unwrap(),
            vec![1, 3, 5]
        );
        assert!(!is_admissible(a(0.5, 0.0), 1.0, 3).unwrap());
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let m = lambda_parameters(a(0.3, -0.6), 1.7, 2.0, 2).unwrap();
        let f = m.eigenfunction();
        let h = 1e-6;
        for i in 1..20 {
            let t = i as f64 / 20.0;
            let fd = (f.value(t + h).unwrap() - f.value(t - h).unwrap()) / (2.0 * h);
            let jet = f.jet(t).unwrap();
            assert!((jet.d1 - fd).norm() < 1e-7 * (1.0 + fd.norm()));
            let fd2 = (f.jet(t + h).unwrap().d1 - f.jet(t - h).unwrap().d1) / (2.0 * h);
            assert!((jet.d2 - fd2).norm() < 1e-6 * (1.0 + fd2.norm()));
        }
    }
}
