//! Spatial eigenproblems `X'' + mu x^e X = 0` on `[0, 1]`.
//!
//! With Dirichlet data at both ends the spectrum is known in closed form:
//! `mu_l = ((e + 2)/2 * j_l)^2` with `j_l` the zeros of `J_{1/(e+2)}`, and the
//! eigenfunctions are `x^{1/2} J_{1/(e+2)}(j_l x^{(e+2)/2})` up to scale. Mixed
//! Dirichlet/Neumann data is handled by a shooting solver.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::special::{
    bessel_j_unchecked, bessel_leading_coefficient, bessel_roots, BesselError, BesselOrder,
};

/// Step of the fixed-step integrator used by the shooting solver.
pub const SHOOTING_STEP: f64 = 1e-4;

/// Below this abscissa the second derivative of a closed-form eigenfunction is
/// taken from the ODE itself.
const ODE_IDENTITY_CUTOFF: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("degeneracy exponent {0} must be finite and nonnegative")]
    InvalidExponent(f64),
    #[error("eigenvalue count must be at least 1")]
    ZeroCount,
    #[error("eigenfunction evaluated at x = {0}, outside [0, 1]")]
    OutOfDomain(f64),
    #[error("shooting found {found} of {requested} eigenvalues below mu = {horizon}")]
    Shooting {
        requested: usize,
        found: usize,
        horizon: f64,
    },
}

impl SpectrumError {
    /// True for root-finding or shooting non-convergence.
    pub fn is_numerical(&self) -> bool {
        match self {
            SpectrumError::Bessel(e) => e.is_numerical(),
            SpectrumError::Shooting { .. } => true,
            _ => false,
        }
    }
}

/// One closed-form eigenpair of the Dirichlet problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialEigenpair {
    pub exponent: f64,
    pub index: usize,
    pub mu: f64,
    /// The Bessel zero `j_index` of order `1/(exponent + 2)`.
    pub root: f64,
    pub amplitude: f64,
}

impl SpatialEigenpair {
    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }
}

fn check_exponent(exponent: f64) -> Result<(), SpectrumError> {
    if exponent.is_finite() && exponent >= 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidExponent(exponent))
    }
}

/// The first `count` Dirichlet eigenpairs for the given degeneracy exponent.
pub fn spatial_eigenvalues(
    exponent: f64,
    count: usize,
) -> Result<Vec<SpatialEigenpair>, SpectrumError> {
    check_exponent(exponent)?;
    if count == 0 {
        return Err(SpectrumError::ZeroCount);
    }
    let order = BesselOrder::for_exponent(exponent)?;
    let table = bessel_roots(order, count)?;
    let half = 0.5 * (exponent + 2.0);
    Ok(table
        .roots()
        .iter()
        .enumerate()
        .map(|(i, &root)| SpatialEigenpair {
            exponent,
            index: i + 1,
            mu: (half * root).powi(2),
            root,
            amplitude: 1.0,
        })
        .collect())
}

/// Value and first two derivatives of a real function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Closed-form eigenfunction
/// `A (2/(e+2))^{1/(e+2)} mu^{1/(2(e+2))} x^{1/2} J_nu(2 sqrt(mu)/(e+2) x^{(e+2)/2})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselEigenfunction {
    pair: SpatialEigenpair,
    nu: f64,
    half: f64,
    scale: f64,
    /// Product `A * norm * beta * half`, the prefactor of `X'`.
    slope_factor: f64,
}

impl BesselEigenfunction {
    pub fn new(pair: SpatialEigenpair) -> Self {
        let e = pair.exponent;
        let nu = 1.0 / (e + 2.0);
        let half = 0.5 * (e + 2.0);
        let norm = (2.0 / (e + 2.0)).powf(nu) * pair.mu.powf(0.5 * nu);
        let beta = pair.mu.sqrt() / half;
        let scale = pair.amplitude * norm;
        Self {
            pair,
            nu,
            half,
            scale,
            slope_factor: scale * beta * half,
        }
    }

    pub fn pair(&self) -> &SpatialEigenpair {
        &self.pair
    }

    pub fn mu(&self) -> f64 {
        self.pair.mu
    }

    fn beta(&self) -> f64 {
        self.pair.mu.sqrt() / self.half
    }

    pub fn value(&self, x: f64) -> Result<f64, SpectrumError> {
        check_unit(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let z = self.beta() * x.powf(self.half);
        Ok(self.scale * x.sqrt() * bessel_j_unchecked(self.nu, z))
    }

    /// Value, slope and curvature.
    ///
    /// `X' = A K beta q x^{q - 1/2} J_{nu-1}(z)` follows from the recurrence for
    /// `J'_nu`; it stays finite at the origin. `X''` differentiates that
    /// expression once more through `J'_{nu-1} = ((nu-1)/z) J_{nu-1} - J_nu`,
    /// except near `x = 0` where `X'' = -mu x^e X` is used.
    pub fn jet(&self, x: f64) -> Result<Jet, SpectrumError> {
        check_unit(x)?;
        let e = self.pair.exponent;
        let mu = self.pair.mu;
        let q = self.half;
        let beta = self.beta();
        if x == 0.0 {
            let d1 = self.slope_factor
                * bessel_leading_coefficient(self.nu - 1.0)
                * beta.powf(self.nu - 1.0);
            return Ok(Jet {
                value: 0.0,
                d1,
                d2: 0.0,
            });
        }
        let z = beta * x.powf(q);
        let j_nu = bessel_j_unchecked(self.nu, z);
        let j_prev = bessel_j_unchecked(self.nu - 1.0, z);
        let value = self.scale * x.sqrt() * j_nu;
        let d1 = self.slope_factor * x.powf(q - 0.5) * j_prev;
        let d2 = if x < ODE_IDENTITY_CUTOFF {
            -mu * x.powf(e) * value
        } else {
            let dj_prev = (self.nu - 1.0) / z * j_prev - j_nu;
            self.slope_factor
                * ((q - 0.5) * x.powf(q - 1.5) * j_prev
                    + beta * q * x.powf(2.0 * q - 1.5) * dj_prev)
        };
        Ok(Jet { value, d1, d2 })
    }
}

fn check_unit(x: f64) -> Result<(), SpectrumError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(SpectrumError::OutOfDomain(x))
    }
}

/// Evaluator for the closed-form eigenfunction of `pair`.
pub fn spatial_eigenfunction(pair: SpatialEigenpair) -> BesselEigenfunction {
    BesselEigenfunction::new(pair)
}

/// Endpoint condition of a spatial eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EndCondition {
    /// `X = 0`.
    Dirichlet,
    /// `X' = 0`.
    Neumann,
}

impl EndCondition {
    fn letter(self) -> char {
        match self {
            EndCondition::Dirichlet => 'D',
            EndCondition::Neumann => 'N',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BoundaryKind {
    pub left: EndCondition,
    pub right: EndCondition,
}

impl BoundaryKind {
    pub const DIRICHLET: BoundaryKind = BoundaryKind {
        left: EndCondition::Dirichlet,
        right: EndCondition::Dirichlet,
    };

    pub fn new(left: EndCondition, right: EndCondition) -> Self {
        Self { left, right }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.left.letter(), self.right.letter())
    }
}

impl FromStr for BoundaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |c: char| match c.to_ascii_uppercase() {
            'D' => Ok(EndCondition::Dirichlet),
            'N' => Ok(EndCondition::Neumann),
            other => Err(format!(
                "unknown boundary condition '{other}', expected D or N"
            )),
        };
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 2 {
            return Err(format!(
                "boundary kind '{s}' must be two letters such as DD or ND"
            ));
        }
        Ok(Self::new(parse(chars[0])?, parse(chars[1])?))
    }
}

/// An eigenfunction tabulated by the shooting integrator, with cubic Hermite
/// interpolation between nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootingEigenfunction {
    pub exponent: f64,
    pub bc: BoundaryKind,
    pub index: usize,
    pub mu: f64,
    pub amplitude: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl ShootingEigenfunction {
    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Tabulated `(x, X, X')` triples, amplitude applied.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.slopes)
            .enumerate()
            .map(move |(i, (&v, &d))| {
                (i as f64 * self.step, self.amplitude * v, self.amplitude * d)
            })
    }

    pub fn jet(&self, x: f64) -> Result<Jet, SpectrumError> {
        check_unit(x)?;
        let last = self.values.len() - 1;
        let pos = x / self.step;
        let i = (pos.floor() as usize).min(last - 1);
        let h = self.step;
        let s = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        let d1 = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        let value = self.amplitude * value;
        Ok(Jet {
            value,
            d1: self.amplitude * d1,
            d2: -self.mu * x.powf(self.exponent) * value,
        })
    }
}

/// Fixed-step RK4 integrator for `X'' = -mu w(x) X` with `w(x) = x^e`.
struct ShootingIntegrator {
    steps: usize,
    h: f64,
    /// Weight at `x_i` for even indices and at `x_i + h/2` for odd ones.
    weights: Vec<f64>,
    left: EndCondition,
}

impl ShootingIntegrator {
    fn new(exponent: f64, left: EndCondition) -> Self {
        let steps = (1.0 / SHOOTING_STEP).round() as usize;
        let h = 1.0 / steps as f64;
        let weights = (0..=2 * steps)
            .map(|j| (0.5 * h * j as f64).powf(exponent))
            .collect();
        Self {
            steps,
            h,
            weights,
            left,
        }
    }

    fn initial(&self) -> (f64, f64) {
        match self.left {
            EndCondition::Dirichlet => (0.0, 1.0),
            EndCondition::Neumann => (1.0, 0.0),
        }
    }

    fn run(&self, mu: f64, mut record: impl FnMut(f64, f64)) -> (f64, f64) {
        let (mut y, mut v) = self.initial();
        record(y, v);
        let h = self.h;
        for i in 0..self.steps {
            let w0 = self.weights[2 * i];
            let wm = self.weights[2 * i + 1];
            let w1 = self.weights[2 * i + 2];
            let k1y = v;
            let k1v = -mu * w0 * y;
            let k2y = v + 0.5 * h * k1v;
            let k2v = -mu * wm * (y + 0.5 * h * k1y);
            let k3y = v + 0.5 * h * k2v;
            let k3v = -mu * wm * (y + 0.5 * h * k2y);
            let k4y = v + h * k3v;
            let k4v = -mu * w1 * (y + h * k3y);
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            record(y, v);
        }
        (y, v)
    }

    fn endpoint(&self, mu: f64, right: EndCondition) -> f64 {
        let (y, v) = self.run(mu, |_, _| {});
        match right {
            EndCondition::Dirichlet => y,
            EndCondition::Neumann => v,
        }
    }
}

/// The first `count` positive eigenvalues of `X'' + mu x^e X = 0` under the
/// endpoint conditions `bc`, found by shooting from `x = 0` and bisecting on
/// the right-endpoint functional.
///
/// The scan runs in `sqrt(mu)` with step `(e+2) pi / 32`, well below the
/// asymptotic eigenvalue spacing `(e+2) pi / 2`, up to the horizon
/// `((e+2)/2)^2 ((count+2) pi)^2`. The zero mode of the Neumann/Neumann
/// problem is not reported.
pub fn shooting_eigenvalues(
    exponent: f64,
    bc: BoundaryKind,
    count: usize,
) -> Result<Vec<ShootingEigenfunction>, SpectrumError> {
    check_exponent(exponent)?;
    if count == 0 {
        return Err(SpectrumError::ZeroCount);
    }
    let integrator = ShootingIntegrator::new(exponent, bc.left);
    let half = 0.5 * (exponent + 2.0);
    let omega_max = half * (count as f64 + 2.0) * PI;
    let horizon = omega_max * omega_max;
    let d_omega = half * PI / 16.0;
    let functional = |mu: f64| integrator.endpoint(mu, bc.right);

    let mut found = Vec::with_capacity(count);
    let mut omega = d_omega;
    let mut f_prev = functional(omega * omega);
    while found.len() < count {
        let next = omega + d_omega;
        if next > omega_max {
            return Err(SpectrumError::Shooting {
                requested: count,
                found: found.len(),
                horizon,
            });
        }
        let f_next = functional(next * next);
        if f_prev.signum() != f_next.signum() || f_next == 0.0 {
            found.push(bisect(&functional, omega * omega, next * next, f_prev));
        }
        omega = next;
        f_prev = f_next;
    }

    Ok(found
        .into_iter()
        .enumerate()
        .map(|(i, mu)| {
            let mut values = Vec::with_capacity(integrator.steps + 1);
            let mut slopes = Vec::with_capacity(integrator.steps + 1);
            integrator.run(mu, |y, v| {
                values.push(y);
                slopes.push(v);
            });
            ShootingEigenfunction {
                exponent,
                bc,
                index: i + 1,
                mu,
                amplitude: 1.0,
                step: integrator.h,
                values,
                slopes,
            }
        })
        .collect())
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_limit_dirichlet() {
        let pairs = spatial_eigenvalues(0.0, 3).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            let l = (i + 1) as f64;
            assert!((p.mu - (l * PI).powi(2)).abs() < 1e-9 * p.mu);
        }
    }

    #[test]
    fn eigenvalues_increase() {
        for e in [0.5, 1.0, 2.0, 5.0] {
            let pairs = spatial_eigenvalues(e, 6).unwrap();
            assert!(pairs.windows(2).all(|w| w[1].mu > w[0].mu));
            for p in &pairs {
                let expected = (0.5 * (e + 2.0) * p.root).powi(2);
                assert_eq!(p.mu, expected);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            spatial_eigenvalues(-1.0, 2),
            Err(SpectrumError::InvalidExponent(_))
        ));
        assert!(matches!(
            spatial_eigenvalues(1.0, 0),
            Err(SpectrumError::ZeroCount)
        ));
        let f = spatial_eigenfunction(spatial_eigenvalues(1.0, 1).unwrap()[0]);
        assert!(matches!(f.jet(1.2), Err(SpectrumError::OutOfDomain(_))));
        assert!(f.value(-0.1).is_err());
    }

    #[test]
    fn eigenfunction_endpoints_vanish() {
        for e in [0.5, 1.0, 2.0, 5.0] {
            for pair in spatial_eigenvalues(e, 10).unwrap() {
                let f = spatial_eigenfunction(pair);
                assert_eq!(f.value(0.0).unwrap(), 0.0);
                assert!(f.value(1.0).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exponent_zero_is_a_sine() {
        let f = spatial_eigenfunction(spatial_eigenvalues(0.0, 1).unwrap()[0]);
        let c = f.value(0.5).unwrap();
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let expected = c * (PI * x).sin();
            assert!((f.value(x).unwrap() - expected).abs() < 1e-10);
        }
        // Amplitude 1 gives sqrt(2/pi) sin(pi x).
        assert!((c - (2.0 / PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ode_residual_with_analytic_derivatives() {
        for e in [0.5, 1.0, 2.0, 5.0] {
            for pair in spatial_eigenvalues(e, 5).unwrap() {
                let f = spatial_eigenfunction(pair);
                let mut worst: f64 = 0.0;
                for i in 0..=2000 {
                    let x = 1e-3 + (1.0 - 2e-3) * i as f64 / 2000.0;
                    let jet = f.jet(x).unwrap();
                    worst = worst.max((jet.d2 + pair.mu * x.powf(e) * jet.value).abs());
                }
                assert!(
                    worst < 1e-8,
                    "exponent {e}, index {}: {worst:e}",
                    pair.index
                );
            }
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let pair = spatial_eigenvalues(1.5, 3).unwrap()[2];
        let f = spatial_eigenfunction(pair);
        let h = 1e-5;
        for i in 1..50 {
            let x = i as f64 / 50.0;
            let fd = (f.value(x + h).unwrap() - f.value(x - h).unwrap()) / (2.0 * h);
            let jet = f.jet(x).unwrap();
            assert!((jet.d1 - fd).abs() < 1e-7 * (1.0 + fd.abs()), "x = {x}");
            let fd2 = (f.jet(x + h).unwrap().d1 - f.jet(x - h).unwrap().d1) / (2.0 * h);
            assert!((jet.d2 - fd2).abs() < 1e-6 * (1.0 + fd2.abs()), "x = {x}");
        }
        // Slope at the origin is the limit of the slope formula.
        let d0 = f.jet(0.0).unwrap().d1;
        let d_small = f.jet(1e-6).unwrap().d1;
        assert!((d0 - d_small).abs() < 1e-6 * d0.abs());
    }

    #[test]
    fn boundary_kind_parsing() {
        let bc: BoundaryKind = "nd".parse().unwrap();
        assert_eq!(bc.left, EndCondition::Neumann);
        assert_eq!(bc.right, EndCondition::Dirichlet);
        assert_eq!(bc.to_string(), "ND");
        assert!("DX".parse::<BoundaryKind>().is_err());
        assert!("D".parse::<BoundaryKind>().is_err());
    }

    #[test]
    fn shooting_classical_spectra() {
        let dd = shooting_eigenvalues(0.0, BoundaryKind::DIRICHLET, 3).unwrap();
        for (i, ef) in dd.iter().enumerate() {
            let exact = ((i + 1) as f64 * PI).powi(2);
            assert!((ef.mu - exact).abs() < 1e-6 * exact);
        }
        let nd = shooting_eigenvalues(
            0.0,
            BoundaryKind::new(EndCondition::Neumann, EndCondition::Dirichlet),
            2,
        )
        .unwrap();
        for (i, ef) in nd.iter().enumerate() {
            let exact = ((i as f64 + 0.5) * PI).powi(2);
            assert!((ef.mu - exact).abs() < 1e-6 * exact);
        }
        let nn = shooting_eigenvalues(
            0.0,
            BoundaryKind::new(EndCondition::Neumann, EndCondition::Neumann),
            2,
        )
        .unwrap();
        for (i, ef) in nn.iter().enumerate() {
            let exact = ((i + 1) as f64 * PI).powi(2);
            assert!((ef.mu - exact).abs() < 1e-6 * exact);
        }
    }

    #[test]
    fn shooting_eigenfunction_satisfies_endpoint_conditions() {
        let bc = BoundaryKind::new(EndCondition::Dirichlet, EndCondition::Neumann);
        for ef in shooting_eigenvalues(1.0, bc, 3).unwrap() {
            let left = ef.jet(0.0).unwrap();
            let right = ef.jet(1.0).unwrap();
            assert_eq!(left.value, 0.0);
            assert!(right.d1.abs() < 1e-8, "X'(1) = {:e}", right.d1);
            assert_eq!(ef.samples().count(), 10_001);
        }
    }

    #[test]
    fn hermite_interpolation_tracks_closed_form() {
        let pair = spatial_eigenvalues(1.0, 2).unwrap()[1];
        let exact = spatial_eigenfunction(pair);
        let shot = &shooting_eigenvalues(1.0, BoundaryKind::DIRICHLET, 2).unwrap()[1];
        // Shooting starts with X'(0) = 1; rescale the closed form to match.
        let c = 1.0 / exact.jet(0.0).unwrap().d1;
        for i in 0..=333 {
            let x = i as f64 / 333.0;
            let a = shot.jet(x).unwrap();
            let b = exact.jet(x).unwrap();
            assert!((a.value - c * b.value).abs() < 1e-8);
            assert!((a.d1 - c * b.d1).abs() < 1e-7);
        }
    }
}
