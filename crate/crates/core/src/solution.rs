//! Assembled modal solutions.
//!
//! A Problem-1 mode is the product `u = D X_l(x) Y_p(y) T_s(t)` of two spatial
//! eigenfunctions and a temporal eigenfunction, with `mu_lp = mu_1l + mu_2p`
//! feeding the temporal spectral parameter. The mixed variants `P2..P9` swap
//! Dirichlet data for Neumann data on some lateral faces and take their
//! spatial factors from the shooting solver. A Problem-A mode replaces the
//! `y` eigenfunction by an exponential factor tied to a second nonlocal
//! condition in `y`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::spectrum::{
    shooting_eigenvalues, spatial_eigenfunction, spatial_eigenvalues, BesselEigenfunction,
    BoundaryKind, EndCondition, Jet, ShootingEigenfunction, SpectrumError,
};
use crate::temporal::{
    lambda_parameters, ComplexJet, ExponentialFactor, NonlocalCoefficient, TemporalError,
    TemporalMode, ADMISSIBILITY_TOLERANCE,
};

/// Relative tolerance on the spectral parameter when superposing modes.
pub const SUPERPOSITION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("exponent {name} = {value} must be positive")]
    InvalidExponent { name: &'static str, value: f64 },
    #[error("operation requires a {expected} problem, got {found}")]
    WrongVariant {
        expected: &'static str,
        found: Variant,
    },
    #[error("missing nonlocal coefficient {0}")]
    MissingCoefficient(&'static str),
    #[error("mode index {name} must be at least 1")]
    InvalidIndex { name: &'static str },
    #[error("split parameter {0} outside [0, 1]")]
    InvalidSplit(f64),
    #[error("point ({0}, {1}, {2}) outside the closed unit cube")]
    OutOfDomain(f64, f64, f64),
    #[error("spectra were built for a different variant or exponents")]
    SpectraMismatch,
    #[error("cannot superpose modes: {0}")]
    IncompatibleSuperposition(String),
}

impl SolutionError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, SolutionError::Spectrum(e) if e.is_numerical())
    }
}

/// Lateral faces of the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Surface {
    /// `x = 1`.
    S2,
    /// `y = 0`.
    S3,
    /// `x = 0`.
    S4,
    /// `y = 1`.
    S5,
}

impl Surface {
    pub const ALL: [Surface; 4] = [Surface::S2, Surface::S3, Surface::S4, Surface::S5];
}

impl FromStr for Surface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "S2" => Ok(Surface::S2),
            "S3" => Ok(Surface::S3),
            "S4" => Ok(Surface::S4),
            "S5" => Ok(Surface::S5),
            _ => Err(format!("unknown surface '{s}', expected S2..S5")),
        }
    }
}

/// Quantity that must vanish on a lateral face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SurfaceQuantity {
    Value,
    NormalDerivative,
}

/// The mixed-boundary problems obtained by replacing `u = 0` with a vanishing
/// normal derivative on some lateral faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MixedProblem {
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
}

impl MixedProblem {
    pub const ALL: [MixedProblem; 8] = [
        MixedProblem::P2,
        MixedProblem::P3,
        MixedProblem::P4,
        MixedProblem::P5,
        MixedProblem::P6,
        MixedProblem::P7,
        MixedProblem::P8,
        MixedProblem::P9,
    ];

    /// Quantities on (S2, S3, S4, S5).
    fn table(self) -> [SurfaceQuantity; 4] {
        use SurfaceQuantity::{NormalDerivative as D, Value as V};
        match self {
            MixedProblem::P2 => [D, D, V, V],
            MixedProblem::P3 => [V, V, D, D],
            MixedProblem::P4 => [V, D, V, D],
            MixedProblem::P5 => [D, V, D, V],
            MixedProblem::P6 => [V, D, V, V],
            MixedProblem::P7 => [V, V, D, V],
            MixedProblem::P8 => [D, V, V, V],
            MixedProblem::P9 => [V, V, V, D],
        }
    }

    pub fn surface_quantity(self, surface: Surface) -> SurfaceQuantity {
        let t = self.table();
        match surface {
            Surface::S2 => t[0],
            Surface::S3 => t[1],
            Surface::S4 => t[2],
            Surface::S5 => t[3],
        }
    }

    fn end(q: SurfaceQuantity) -> EndCondition {
        match q {
            SurfaceQuantity::Value => EndCondition::Dirichlet,
            SurfaceQuantity::NormalDerivative => EndCondition::Neumann,
        }
    }

    /// Conditions for `X` at `x = 0` (S4) and `x = 1` (S2).
    pub fn x_conditions(self) -> BoundaryKind {
        let t = self.table();
        BoundaryKind::new(Self::end(t[2]), Self::end(t[0]))
    }

    /// Conditions for `Y` at `y = 0` (S3) and `y = 1` (S5).
    pub fn y_conditions(self) -> BoundaryKind {
        let t = self.table();
        BoundaryKind::new(Self::end(t[1]), Self::end(t[3]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    Problem1,
    Mixed(MixedProblem),
    ProblemA,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Problem1 => write!(f, "problem 1"),
            Variant::Mixed(p) => write!(f, "{p:?}"),
            Variant::ProblemA => write!(f, "problem A"),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let mixed = |i: usize| Variant::Mixed(MixedProblem::ALL[i - 2]);
        match lower.as_str() {
            "1" | "p1" | "problem1" => Ok(Variant::Problem1),
            "a" | "problema" => Ok(Variant::ProblemA),
            other => match other
                .strip_prefix('p')
                .and_then(|d| d.parse::<usize>().ok())
            {
                Some(i @ 2..=9) => Ok(mixed(i)),
                _ => Err(format!("unknown problem '{s}', expected 1, p2..p9 or A")),
            },
        }
    }
}

/// Degeneracy exponents, variant tag and nonlocal coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: f64,
    pub m: f64,
    pub k: f64,
    pub variant: Variant,
    pub alpha: Option<NonlocalCoefficient>,
    pub beta: Option<NonlocalCoefficient>,
    pub gamma: Option<NonlocalCoefficient>,
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SolutionError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SolutionError::InvalidExponent { name, value })
    }
}

impl ProblemParams {
    pub fn problem1(
        n: f64,
        m: f64,
        k: f64,
        alpha: NonlocalCoefficient,
    ) -> Result<Self, SolutionError> {
        Self::with_variant(Variant::Problem1, n, m, k, alpha)
    }

    pub fn mixed(
        problem: MixedProblem,
        n: f64,
        m: f64,
        k: f64,
        alpha: NonlocalCoefficient,
    ) -> Result<Self, SolutionError> {
        Self::with_variant(Variant::Mixed(problem), n, m, k, alpha)
    }

    fn with_variant(
        variant: Variant,
        n: f64,
        m: f64,
        k: f64,
        alpha: NonlocalCoefficient,
    ) -> Result<Self, SolutionError> {
        let p = Self {
            n,
            m,
            k,
            variant,
            alpha: Some(alpha),
            beta: None,
            gamma: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn problem_a(
        n: f64,
        m: f64,
        k: f64,
        beta: NonlocalCoefficient,
        gamma: NonlocalCoefficient,
    ) -> Result<Self, SolutionError> {
        let p = Self {
            n,
            m,
            k,
            variant: Variant::ProblemA,
            alpha: None,
            beta: Some(beta),
            gamma: Some(gamma),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SolutionError> {
        check_positive("n", self.n)?;
        check_positive("m", self.m)?;
        check_positive("k", self.k)?;
        match self.variant {
            Variant::ProblemA => {
                self.beta.ok_or(SolutionError::MissingCoefficient("beta"))?;
                self.gamma
                    .ok_or(SolutionError::MissingCoefficient("gamma"))?;
            }
            _ => {
                self.alpha
                    .ok_or(SolutionError::MissingCoefficient("alpha"))?;
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<NonlocalCoefficient, SolutionError> {
        self.alpha.ok_or(SolutionError::MissingCoefficient("alpha"))
    }

    pub fn beta(&self) -> Result<NonlocalCoefficient, SolutionError> {
        self.beta.ok_or(SolutionError::MissingCoefficient("beta"))
    }

    pub fn gamma(&self) -> Result<NonlocalCoefficient, SolutionError> {
        self.gamma.ok_or(SolutionError::MissingCoefficient("gamma"))
    }

    pub fn x_conditions(&self) -> BoundaryKind {
        match self.variant {
            Variant::Mixed(p) => p.x_conditions(),
            _ => BoundaryKind::DIRICHLET,
        }
    }

    pub fn y_conditions(&self) -> BoundaryKind {
        match self.variant {
            Variant::Mixed(p) => p.y_conditions(),
            _ => BoundaryKind::DIRICHLET,
        }
    }

    pub fn surface_quantity(&self, surface: Surface) -> SurfaceQuantity {
        match self.variant {
            Variant::Mixed(p) => p.surface_quantity(surface),
            _ => SurfaceQuantity::Value,
        }
    }

    /// Lateral faces that carry a homogeneous boundary condition. In the
    /// two-condition problem the `y` faces are linked by the nonlocal
    /// condition instead, leaving `x = 0` and `x = 1`.
    pub fn boundary_surfaces(&self) -> Vec<Surface> {
        match self.variant {
            Variant::ProblemA => vec![Surface::S2, Surface::S4],
            _ => Surface::ALL.to_vec(),
        }
    }
}

/// Spatial indices `l, p >= 1` and temporal shift `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModeIndex {
    pub l: usize,
    pub p: usize,
    pub s: u32,
}

impl ModeIndex {
    pub fn new(l: usize, p: usize, s: u32) -> Self {
        Self { l, p, s }
    }
}

/// Index of a two-condition mode: `x` index and the shifts of the `y` and `t`
/// exponential factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModeIndexA {
    pub l: usize,
    pub s_y: u32,
    pub s_t: u32,
}

impl ModeIndexA {
    pub fn new(l: usize, s: u32) -> Self {
        Self { l, s_y: s, s_t: s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FieldMode {
    Problem1(ModeIndex),
    ProblemA(ModeIndexA),
}

/// One spatial eigenfunction, closed form or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialFactor {
    Bessel(BesselEigenfunction),
    Shooting(Arc<ShootingEigenfunction>),
}

impl SpatialFactor {
    pub fn mu(&self) -> f64 {
        match self {
            SpatialFactor::Bessel(f) => f.mu(),
            SpatialFactor::Shooting(f) => f.mu,
        }
    }

    pub fn jet(&self, x: f64) -> Result<Jet, SpectrumError> {
        match self {
            SpatialFactor::Bessel(f) => f.jet(x),
            SpatialFactor::Shooting(f) => f.jet(x),
        }
    }
}

/// The `y` factor: an eigenfunction in Problem 1, an exponential in Problem A.
#[derive(Debug, Clone, PartialEq)]
pub enum YFactor {
    Spatial(SpatialFactor),
    Exponential(ExponentialFactor),
}

impl YFactor {
    fn jet(&self, y: f64) -> Result<ComplexJet, SolutionError> {
        match self {
            YFactor::Spatial(f) => Ok(real_jet(f.jet(y)?)),
            YFactor::Exponential(f) => Ok(f.jet(y)?),
        }
    }
}

fn real_jet(j: Jet) -> ComplexJet {
    ComplexJet {
        value: j.value.into(),
        d1: j.d1.into(),
        d2: j.d2.into(),
    }
}

/// `amplitude * X(x) * Y(y) * T(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTerm {
    pub amplitude: f64,
    pub x: SpatialFactor,
    pub y: YFactor,
    pub t: ExponentialFactor,
}

impl ModalTerm {
    fn combine(&self, x: &Jet, y: &ComplexJet, t: &ComplexJet) -> Partials {
        let a = self.amplitude;
        let xy = y.value * x.value;
        Partials {
            u: a * xy * t.value,
            u_x: a * y.value * x.d1 * t.value,
            u_y: a * y.d1 * x.value * t.value,
            u_t: a * xy * t.d1,
            u_xx: a * y.value * x.d2 * t.value,
            u_yy: a * y.d2 * x.value * t.value,
        }
    }
}

/// Which governing equation a field is meant to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquationForm {
    /// `x^n y^m u_t = t^k y^m u_xx + t^k x^n u_yy - lambda t^k x^n y^m u`.
    Parabolic,
    /// `t^k y^m U_xx - t^k x^n U_y - x^n y^m U_t - Lambda x^n y^m t^k U = 0`.
    TwoCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equation {
    pub form: EquationForm,
    pub n: f64,
    pub m: f64,
    pub k: f64,
    /// `lambda` for the parabolic form, `Lambda` for the two-condition form.
    pub lambda: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn check(self) -> Result<Self, SolutionError> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if inside(self.x) && inside(self.y) && inside(self.t) {
            Ok(self)
        } else {
            Err(SolutionError::OutOfDomain(self.x, self.y, self.t))
        }
    }
}

/// `u` and the partial derivatives entering the governing equations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Partials {
    pub u: Complex64,
    pub u_x: Complex64,
    pub u_y: Complex64,
    pub u_t: Complex64,
    pub u_xx: Complex64,
    pub u_yy: Complex64,
}

impl std::ops::AddAssign for Partials {
    fn add_assign(&mut self, o: Partials) {
        self.u += o.u;
        self.u_x += o.u_x;
        self.u_y += o.u_y;
        self.u_t += o.u_t;
        self.u_xx += o.u_xx;
        self.u_yy += o.u_yy;
    }
}

/// Anything the verification routines can evaluate.
///
/// Grid samples are laid out with `x` fastest, then `y`, then `t`.
pub trait Field: Sync {
    fn equation(&self) -> Equation;

    fn partials(&self, point: Point) -> Result<Partials, SolutionError>;

    fn value(&self, point: Point) -> Result<Complex64, SolutionError> {
        Ok(self.partials(point)?.u)
    }

    fn surface_quantity(&self, _surface: Surface) -> SurfaceQuantity {
        SurfaceQuantity::Value
    }

    /// Lateral faces carrying a homogeneous condition.
    fn boundary_surfaces(&self) -> Vec<Surface> {
        Surface::ALL.to_vec()
    }

    /// Coefficient of the nonlocal condition in `t`, if any.
    fn time_coefficient(&self) -> Option<NonlocalCoefficient> {
        None
    }

    /// Coefficient of the nonlocal condition in `y`, if any.
    fn y_coefficient(&self) -> Option<NonlocalCoefficient> {
        None
    }

    fn sample_grid(
        &self,
        xs: &[f64],
        ys: &[f64],
        ts: &[f64],
    ) -> Result<Vec<Partials>, SolutionError> {
        let (nx, ny) = (xs.len(), ys.len());
        (0..xs.len() * ys.len() * ts.len())
            .into_par_iter()
            .map(|i| {
                let ix = i % nx;
                let iy = (i / nx) % ny;
                let it = i / (nx * ny);
                self.partials(Point::new(xs[ix], ys[iy], ts[it]))
            })
            .collect()
    }
}

/// Split of the separation constant `mu_1l` between the `y` and `t`
/// equations of Problem A, with the implied `Lambda` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaSplit {
    pub theta: f64,
    pub lambda_11: f64,
    pub lambda_12: f64,
    pub lambda_21: f64,
    pub lambda_22: f64,
}

impl LambdaSplit {
    pub fn total(&self) -> Complex64 {
        Complex64::new(
            self.lambda_11 + self.lambda_21,
            self.lambda_12 + self.lambda_22,
        )
    }
}

/// An assembled modal solution (or a finite sum of modes sharing one
/// spectral parameter).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub params: ProblemParams,
    pub modes: Vec<FieldMode>,
    pub terms: Vec<ModalTerm>,
    /// `lambda` (Problem 1 family) or `Lambda` (Problem A).
    pub lambda: Complex64,
    /// Every nonlocal condition of every mode holds to the admissibility
    /// tolerance.
    pub admissible: bool,
    /// Temporal modes of Problem-1 fields.
    pub temporal: Vec<TemporalMode>,
    /// `Lambda` decomposition of Problem-A fields.
    pub split: Option<LambdaSplit>,
}

impl SolutionField {
    /// Sum of modes. All must belong to the same problem and share the
    /// spectral parameter to [`SUPERPOSITION_TOLERANCE`].
    pub fn superpose(fields: &[SolutionField]) -> Result<SolutionField, SolutionError> {
        let first = fields.first().ok_or_else(|| {
            SolutionError::IncompatibleSuperposition("no modes given".to_string())
        })?;
        let mut out = first.clone();
        for f in &fields[1..] {
            if f.params != first.params {
                return Err(SolutionError::IncompatibleSuperposition(
                    "modes belong to different problems".to_string(),
                ));
            }
            let scale = first.lambda.norm().max(1.0);
            if (f.lambda - first.lambda).norm() > SUPERPOSITION_TOLERANCE * scale {
                return Err(SolutionError::IncompatibleSuperposition(format!(
                    "spectral parameters {} and {} differ",
                    first.lambda, f.lambda
                )));
            }
            out.modes.extend(f.modes.iter().copied());
            out.terms.extend(f.terms.iter().cloned());
            out.temporal.extend(f.temporal.iter().copied());
            out.admissible &= f.admissible;
        }
        Ok(out)
    }
}

impl Field for SolutionField {
    fn equation(&self) -> Equation {
        Equation {
            form: match self.params.variant {
                Variant::ProblemA => EquationForm::TwoCondition,
                _ => EquationForm::Parabolic,
            },
            n: self.params.n,
            m: self.params.m,
            k: self.params.k,
            lambda: self.lambda,
        }
    }

    fn partials(&self, point: Point) -> Result<Partials, SolutionError> {
        let p = point.check()?;
        let mut out = Partials::default();
        for term in &self.terms {
            let x = term.x.jet(p.x)?;
            let y = term.y.jet(p.y)?;
            let t = term.t.jet(p.t)?;
            out += term.combine(&x, &y, &t);
        }
        Ok(out)
    }

    fn surface_quantity(&self, surface: Surface) -> SurfaceQuantity {
        self.params.surface_quantity(surface)
    }

    fn boundary_surfaces(&self) -> Vec<Surface> {
        self.params.boundary_surfaces()
    }

    fn time_coefficient(&self) -> Option<NonlocalCoefficient> {
        match self.params.variant {
            Variant::ProblemA => self.params.gamma,
            _ => self.params.alpha,
        }
    }

    fn y_coefficient(&self) -> Option<NonlocalCoefficient> {
        match self.params.variant {
            Variant::ProblemA => self.params.beta,
            _ => None,
        }
    }

    /// Tabulates each factor once per axis and forms the products.
    fn sample_grid(
        &self,
        xs: &[f64],
        ys: &[f64],
        ts: &[f64],
    ) -> Result<Vec<Partials>, SolutionError> {
        for &x in xs {
            Point::new(x, 0.0, 0.0).check()?;
        }
        for &y in ys {
            Point::new(0.0, y, 0.0).check()?;
        }
        for &t in ts {
            Point::new(0.0, 0.0, t).check()?;
        }
        let (nx, ny, nt) = (xs.len(), ys.len(), ts.len());
        let mut out = vec![Partials::default(); nx * ny * nt];
        for term in &self.terms {
            let xj: Vec<Jet> = xs
                .par_iter()
                .map(|&x| term.x.jet(x))
                .collect::<Result<_, _>>()?;
            let yj: Vec<ComplexJet> = ys
                .par_iter()
                .map(|&y| term.y.jet(y))
                .collect::<Result<_, _>>()?;
            let tj: Vec<ComplexJet> = ts
                .iter()
                .map(|&t| term.t.jet(t))
                .collect::<Result<_, _>>()?;
            out.par_chunks_mut(nx * ny)
                .zip(tj.par_iter())
                .for_each(|(slab, t)| {
                    for (iy, y) in yj.iter().enumerate() {
                        for (ix, x) in xj.iter().enumerate() {
                            slab[iy * nx + ix] += term.combine(x, y, t);
                        }
                    }
                });
        }
        Ok(out)
    }
}

/// Spatial factors for one problem, computed once and reused across modes.
#[derive(Debug, Clone)]
pub struct Spectra {
    params: ProblemParams,
    x: Vec<SpatialFactor>,
    y: Vec<SpatialFactor>,
}

fn factors(
    exponent: f64,
    bc: BoundaryKind,
    count: usize,
) -> Result<Vec<SpatialFactor>, SolutionError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if bc == BoundaryKind::DIRICHLET {
        Ok(spatial_eigenvalues(exponent, count)?
            .into_iter()
            .map(|p| SpatialFactor::Bessel(spatial_eigenfunction(p)))
            .collect())
    } else {
        Ok(shooting_eigenvalues(exponent, bc, count)?
            .into_iter()
            .map(|f| SpatialFactor::Shooting(Arc::new(f)))
            .collect())
    }
}

impl Spectra {
    /// Factors `X_1..X_{l_max}` and, outside Problem A, `Y_1..Y_{p_max}`.
    pub fn new(params: &ProblemParams, l_max: usize, p_max: usize) -> Result<Self, SolutionError> {
        params.validate()?;
        let y_count = if params.variant == Variant::ProblemA {
            0
        } else {
            p_max
        };
        Ok(Self {
            params: *params,
            x: factors(params.n, params.x_conditions(), l_max)?,
            y: factors(params.m, params.y_conditions(), y_count)?,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Same spatial factors under different nonlocal coefficients. The
    /// exponents `n`, `m` and the variant must match.
    pub fn retarget(&self, params: &ProblemParams) -> Result<Self, SolutionError> {
        params.validate()?;
        if params.variant != self.params.variant
            || params.n != self.params.n
            || params.m != self.params.m
        {
            return Err(SolutionError::SpectraMismatch);
        }
        Ok(Self {
            params: *params,
            x: self.x.clone(),
            y: self.y.clone(),
        })
    }

    pub fn l_max(&self) -> usize {
        self.x.len()
    }

    pub fn p_max(&self) -> usize {
        self.y.len()
    }

    pub fn mu_x(&self, l: usize) -> Option<f64> {
        self.x.get(l.checked_sub(1)?).map(SpatialFactor::mu)
    }

    pub fn mu_y(&self, p: usize) -> Option<f64> {
        self.y.get(p.checked_sub(1)?).map(SpatialFactor::mu)
    }

    fn x_factor(&self, l: usize) -> Result<&SpatialFactor, SolutionError> {
        if l == 0 {
            return Err(SolutionError::InvalidIndex { name: "l" });
        }
        self.x
            .get(l - 1)
            .ok_or(SolutionError::InvalidIndex { name: "l" })
    }

    fn y_factor(&self, p: usize) -> Result<&SpatialFactor, SolutionError> {
        if p == 0 {
            return Err(SolutionError::InvalidIndex { name: "p" });
        }
        self.y
            .get(p - 1)
            .ok_or(SolutionError::InvalidIndex { name: "p" })
    }

    /// `u_lps = X_l Y_p T_s` with unit amplitudes.
    pub fn mode(&self, index: ModeIndex) -> Result<SolutionField, SolutionError> {
        if self.params.variant == Variant::ProblemA {
            return Err(SolutionError::WrongVariant {
                expected: "problem 1 family",
                found: self.params.variant,
            });
        }
        let x = self.x_factor(index.l)?.clone();
        let y = self.y_factor(index.p)?.clone();
        let mu_lp = x.mu() + y.mu();
        let temporal = lambda_parameters(self.params.alpha()?, self.params.k, mu_lp, index.s)?;
        let admissible = temporal.nonlocal_defect() < ADMISSIBILITY_TOLERANCE;
        Ok(SolutionField {
            params: self.params,
            modes: vec![FieldMode::Problem1(index)],
            terms: vec![ModalTerm {
                amplitude: 1.0,
                x,
                y: YFactor::Spatial(y),
                t: temporal.eigenfunction(),
            }],
            lambda: temporal.lambda(),
            admissible,
            temporal: vec![temporal],
            split: None,
        })
    }

    /// `U_ls = X_l(x) exp(c_beta y^{m+1}) exp(c_gamma t^{k+1})` with the
    /// `Lambda` components implied by giving `theta mu_1l` to the `y`
    /// equation and `(1 - theta) mu_1l` to the `t` equation.
    pub fn mode_a(&self, index: ModeIndexA, theta: f64) -> Result<SolutionField, SolutionError> {
        if self.params.variant != Variant::ProblemA {
            return Err(SolutionError::WrongVariant {
                expected: "problem A",
                found: self.params.variant,
            });
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(SolutionError::InvalidSplit(theta));
        }
        let x = self.x_factor(index.l)?.clone();
        let mu = x.mu();
        let (m, k) = (self.params.m, self.params.k);
        let beta = self.params.beta()?;
        let gamma = self.params.gamma()?;
        let y_mode = lambda_parameters(beta, m, theta * mu, index.s_y)?;
        let t_mode = lambda_parameters(gamma, k, (1.0 - theta) * mu, index.s_t)?;
        let split = LambdaSplit {
            theta,
            lambda_11: y_mode.lambda_re,
            lambda_12: y_mode.lambda_im,
            lambda_21: t_mode.lambda_re,
            lambda_22: t_mode.lambda_im,
        };
        let admissible = y_mode.nonlocal_defect() < ADMISSIBILITY_TOLERANCE
            && t_mode.nonlocal_defect() < ADMISSIBILITY_TOLERANCE;
        Ok(SolutionField {
            params: self.params,
            modes: vec![FieldMode::ProblemA(index)],
            terms: vec![ModalTerm {
                amplitude: 1.0,
                x,
                y: YFactor::Exponential(y_mode.eigenfunction()),
                t: t_mode.eigenfunction(),
            }],
            lambda: split.total(),
            admissible,
            temporal: Vec::new(),
            split: Some(split),
        })
    }
}

/// Problem-1 (or mixed-variant) mode `u_lps`.
pub fn build_mode_solution(
    params: &ProblemParams,
    l: usize,
    p: usize,
    s: u32,
) -> Result<SolutionField, SolutionError> {
    if l == 0 {
        return Err(SolutionError::InvalidIndex { name: "l" });
    }
    if p == 0 {
        return Err(SolutionError::InvalidIndex { name: "p" });
    }
    Spectra::new(params, l, p)?.mode(ModeIndex::new(l, p, s))
}

/// Problem-A mode `U_ls` with a common shift in `y` and `t`.
pub fn build_mode_solution_a(
    params: &ProblemParams,
    l: usize,
    s: u32,
    theta: f64,
) -> Result<SolutionField, SolutionError> {
    build_mode_solution_a_shifts(params, ModeIndexA::new(l, s), theta)
}

pub fn build_mode_solution_a_shifts(
    params: &ProblemParams,
    index: ModeIndexA,
    theta: f64,
) -> Result<SolutionField, SolutionError> {
    if index.l == 0 {
        return Err(SolutionError::InvalidIndex { name: "l" });
    }
    Spectra::new(params, index.l, 0)?.mode_a(index, theta)
}

/// Unsplit `Lambda`: each of the `y` and `t` parts
/// carries the full `-mu_1l`, and the imaginary parts carry no shift.
pub fn literal_problem_a_lambda(
    params: &ProblemParams,
    mu_1l: f64,
) -> Result<LambdaSplit, SolutionError> {
    let beta = params.beta()?;
    let gamma = params.gamma()?;
    let (m, k) = (params.m, params.k);
    Ok(LambdaSplit {
        theta: f64::NAN,
        lambda_11: -mu_1l + (m + 1.0) * beta.log_modulus(),
        lambda_12: (m + 1.0) * beta.principal_angle(),
        lambda_21: -mu_1l + (k + 1.0) * gamma.log_modulus(),
        lambda_22: (k + 1.0) * gamma.principal_angle(),
    })
}

/// Evaluates a field and its partials at a point of the closed cube.
pub fn evaluate_with_partials(field: &impl Field, point: Point) -> Result<Partials, SolutionError> {
    field.partials(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    impl ModalTerm {
        fn y_mu(&self) -> Option<f64> {
            match &self.y {
                YFactor::Spatial(f) => Some(f.mu()),
                YFactor::Exponential(_) => None,
            }
        }
    }

    fn alpha(re: f64, im: f64) -> NonlocalCoefficient {
        NonlocalCoefficient::new(re, im).unwrap()
    }

    fn reference() -> SolutionField {
        let p = ProblemParams::problem1(1.0, 1.0, 1.0, alpha(0.5, 0.0)).unwrap();
        build_mode_solution(&p, 1, 1, 2).unwrap()
    }

    #[test]
    fn vanishes_on_faces() {
        let f = reference();
        assert!(f.admissible);
        for i in 0..=10 {
            let a = i as f64 / 10.0;
            assert_eq!(f.value(Point::new(0.0, a, 0.3)).unwrap().norm(), 0.0);
            assert!(f.value(Point::new(a, 1.0, 0.7)).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_outside_points_and_bad_params() {
        let f = reference();
        assert!(matches!(
            f.partials(Point::new(0.5, 1.01, 0.2)),
            Err(SolutionError::OutOfDomain(..))
        ));
        assert!(ProblemParams::problem1(0.0, 1.0, 1.0, alpha(0.5, 0.0)).is_err());
        let pa = ProblemParams::problem_a(1.0, 1.0, 1.0, alpha(0.5, 0.0), alpha(0.5, 0.0)).unwrap();
        assert!(matches!(
            build_mode_solution_a(&pa, 1, 0, 1.5),
            Err(SolutionError::InvalidSplit(_))
        ));
        assert!(matches!(
            build_mode_solution(&pa, 1, 1, 0),
            Err(SolutionError::WrongVariant { .. })
        ));
        let p = ProblemParams::problem1(1.0, 1.0, 1.0, alpha(0.5, 0.0)).unwrap();
        assert!(build_mode_solution(&p, 0, 1, 0).is_err());
    }

    #[test]
    fn time_derivative_vanishes_at_initial_plane() {
        let f = reference();
        let d = f.partials(Point::new(0.4, 0.6, 0.0)).unwrap();
        assert_eq!(d.u_t, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn ode_identity_near_degenerate_edge() {
        let f = reference();
        let y = 1e-6;
        let d = f.partials(Point::new(0.3, y, 0.5)).unwrap();
        let mu2 = f.terms[0].y_mu().unwrap();
        let expected = -mu2 * y.powf(f.params.m) * d.u;
        assert!((d.u_yy - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn grid_sampling_matches_pointwise() {
        let f = reference();
        let xs = [0.0, 0.25, 0.9];
        let ys = [0.1, 1.0];
        let ts = [0.0, 0.5, 1.0, 0.75];
        let grid = f.sample_grid(&xs, &ys, &ts).unwrap();
        let mut i = 0;
        for &t in &ts {
            for &y in &ys {
                for &x in &xs {
                    let p = f.partials(Point::new(x, y, t)).unwrap();
                    assert_eq!(grid[i], p);
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn superposition_requires_common_lambda() {
        let p = ProblemParams::problem1(1.0, 1.0, 1.0, alpha(0.5, 0.0)).unwrap();
        let sp = Spectra::new(&p, 2, 2).unwrap();
        let a = sp.mode(ModeIndex::new(1, 2, 0)).unwrap();
        let b = sp.mode(ModeIndex::new(2, 1, 0)).unwrap();
        let sum = SolutionField::superpose(&[a.clone(), b.clone()]).unwrap();
        let pt = Point::new(0.3, 0.6, 0.2);
        let expected = a.value(pt).unwrap() + b.value(pt).unwrap();
        assert!((sum.value(pt).unwrap() - expected).norm() < 1e-15);
        let c = sp.mode(ModeIndex::new(1, 1, 0)).unwrap();
        assert!(SolutionField::superpose(&[a, c]).is_err());
    }

    #[test]
    fn mixed_table_maps_faces() {
        let p2 = MixedProblem::P2;
        assert_eq!(p2.x_conditions().to_string(), "DN");
        assert_eq!(p2.y_conditions().to_string(), "ND");
        assert_eq!(MixedProblem::P4.y_conditions().to_string(), "NN");
        assert_eq!(MixedProblem::P5.x_conditions().to_string(), "NN");
        assert_eq!(MixedProblem::P9.y_conditions().to_string(), "DN");
        assert_eq!(
            "p7".parse::<Variant>().unwrap(),
            Variant::Mixed(MixedProblem::P7)
        );
        assert_eq!("A".parse::<Variant>().unwrap(), Variant::ProblemA);
        assert!("p10".parse::<Variant>().is_err());
    }

    #[test]
    fn problem_a_lambda_split() {
        let pa = ProblemParams::problem_a(1.0, 2.0, 1.0, alpha(0.5, 0.0), alpha(0.8, 0.1)).unwrap();
        let f0 = build_mode_solution_a(&pa, 1, 2, 0.0).unwrap();
        let f1 = build_mode_solution_a(&pa, 1, 2, 1.0).unwrap();
        // The field is the same for every split; only the bookkeeping moves.
        let pt = Point::new(0.3, 0.4, 0.5);
        assert_eq!(f0.value(pt).unwrap(), f1.value(pt).unwrap());
        assert!((f0.lambda - f1.lambda).norm() < 1e-12);
        let s0 = f0.split.unwrap();
        let s1 = f1.split.unwrap();
        assert!((s0.lambda_21 - s1.lambda_21 + f0.terms[0].x.mu()).abs() < 1e-10);
        assert!(f0.admissible);
    }
}
