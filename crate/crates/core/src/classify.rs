//! Uniqueness classification and nontrivial-solution witnesses.
//!
//! The energy argument guarantees uniqueness when `|alpha| < 1` and
//! `Re lambda >= 0` (two-condition problem: `|beta|, |gamma| < 1` and
//! `Re Lambda >= 0`). Outside that region the classifier looks for a modal
//! solution with the requested spectral parameter and verifies it
//! numerically before reporting it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::solution::{
    Field, ModeIndex, ModeIndexA, ProblemParams, SolutionError, SolutionField, Spectra, Variant,
};
use crate::spectrum::BoundaryKind;
use crate::temporal::{is_admissible, lambda_parameters, NonlocalCoefficient, TemporalError};
use crate::verify::{
    boundary_sup, nonlocal_defect, pde_residual_analytic, GridSpec, NonlocalAxis, VerifyError,
    RESIDUAL_TOLERANCE,
};

/// Componentwise tolerance when matching a spectral parameter to a mode.
pub const LAMBDA_MATCH_TOLERANCE: f64 = 1e-9;
/// Boundary and nonlocal defect tolerance for closed-form witnesses.
pub const DEFECT_TOLERANCE: f64 = 1e-10;
/// Boundary tolerance when a factor comes from the shooting solver.
pub const SHOOTING_BOUNDARY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error("search box needs l_max, p_max >= 1")]
    InvalidBox,
    #[error("lattice needs r_max > 0 and at least 2 points per axis")]
    InvalidLattice,
    #[error("spectral parameter must be finite")]
    NonFiniteLambda,
}

impl ClassifyError {
    pub fn is_numerical(&self) -> bool {
        match self {
            ClassifyError::Solution(e) => e.is_numerical(),
            ClassifyError::Verify(e) => e.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VerdictStatus {
    UniqueGuaranteed,
    NontrivialExists,
    Indeterminate,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::UniqueGuaranteed => "UniqueGuaranteed",
            VerdictStatus::NontrivialExists => "NontrivialExists",
            VerdictStatus::Indeterminate => "Indeterminate",
        }
    }
}

/// Which uniqueness theorem the verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Theorem {
    /// Single nonlocal condition in `t`.
    T1,
    /// Nonlocal conditions in `y` and `t`.
    T2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Witness {
    Problem1(ModeIndex),
    ProblemA(ModeIndexA),
}

/// Inclusive search ranges `1..=l_max`, `1..=p_max`, `0..=s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBox {
    pub l_max: usize,
    pub p_max: usize,
    pub s_max: u32,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            l_max: 5,
            p_max: 5,
            s_max: 8,
        }
    }
}

impl SearchBox {
    fn validate(&self) -> Result<(), ClassifyError> {
        if self.l_max >= 1 && self.p_max >= 1 {
            Ok(())
        } else {
            Err(ClassifyError::InvalidBox)
        }
    }
}

/// Defects of an assembled witness field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessChecks {
    pub pde_residual: f64,
    pub boundary: f64,
    pub nonlocal: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessVerdict {
    pub status: VerdictStatus,
    pub theorem: Theorem,
    pub lambda: Complex64,
    /// `|alpha|^2 < 1` (or both `|beta|^2, |gamma|^2 < 1`).
    pub theorem_region: bool,
    pub witness: Option<Witness>,
    /// Checks of the candidate witness, when one was found.
    pub checks: Option<WitnessChecks>,
}

fn theorem_region(params: &ProblemParams) -> Result<bool, ClassifyError> {
    Ok(match params.variant {
        Variant::ProblemA => {
            params.beta()?.modulus_squared() < 1.0 && params.gamma()?.modulus_squared() < 1.0
        }
        _ => params.alpha()?.modulus_squared() < 1.0,
    })
}

fn theorem(params: &ProblemParams) -> Theorem {
    match params.variant {
        Variant::ProblemA => Theorem::T2,
        _ => Theorem::T1,
    }
}

/// Smallest `(l, p, s)` in lexicographic order whose spectral parameter
/// matches `lambda` and whose shift is admissible.
pub fn nontrivial_witness(
    params: &ProblemParams,
    lambda: Complex64,
    search: SearchBox,
) -> Result<Option<ModeIndex>, ClassifyError> {
    search.validate()?;
    let spectra = Spectra::new(params, search.l_max, search.p_max)?;
    witness_in(&spectra, lambda, search)
}

fn matches(a: Complex64, b: Complex64) -> bool {
    (a.re - b.re).abs() <= LAMBDA_MATCH_TOLERANCE && (a.im - b.im).abs() <= LAMBDA_MATCH_TOLERANCE
}

fn witness_in(
    spectra: &Spectra,
    lambda: Complex64,
    search: SearchBox,
) -> Result<Option<ModeIndex>, ClassifyError> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(ClassifyError::NonFiniteLambda);
    }
    let params = spectra.params();
    if params.variant == Variant::ProblemA {
        return Err(SolutionError::WrongVariant {
            expected: "problem 1 family",
            found: params.variant,
        }
        .into());
    }
    let alpha = params.alpha()?;
    let admissible: Vec<bool> = (0..=search.s_max)
        .map(|s| is_admissible(alpha, params.k, s))
        .collect::<Result<_, _>>()?;
    for l in 1..=search.l_max.min(spectra.l_max()) {
        for p in 1..=search.p_max.min(spectra.p_max()) {
            let mu = spectra.mu_x(l).unwrap_or(f64::NAN) + spectra.mu_y(p).unwrap_or(f64::NAN);
            for s in 0..=search.s_max {
                if !admissible[s as usize] {
                    continue;
                }
                let mode = lambda_parameters(alpha, params.k, mu, s)?;
                if matches(mode.lambda(), lambda) {
                    return Ok(Some(ModeIndex::new(l, p, s)));
                }
            }
        }
    }
    Ok(None)
}

/// Smallest `(l, s_y, s_t)` whose two-condition `Lambda` matches.
pub fn nontrivial_witness_a(
    params: &ProblemParams,
    lambda: Complex64,
    search: SearchBox,
) -> Result<Option<ModeIndexA>, ClassifyError> {
    search.validate()?;
    let spectra = Spectra::new(params, search.l_max, 0)?;
    witness_a_in(&spectra, lambda, search)
}

fn witness_a_in(
    spectra: &Spectra,
    lambda: Complex64,
    search: SearchBox,
) -> Result<Option<ModeIndexA>, ClassifyError> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(ClassifyError::NonFiniteLambda);
    }
    let params = spectra.params();
    let (beta, gamma) = (params.beta()?, params.gamma()?);
    let y_ok: Vec<bool> = (0..=search.s_max)
        .map(|s| is_admissible(beta, params.m, s))
        .collect::<Result<_, _>>()?;
    let t_ok: Vec<bool> = (0..=search.s_max)
        .map(|s| is_admissible(gamma, params.k, s))
        .collect::<Result<_, _>>()?;
    for l in 1..=search.l_max.min(spectra.l_max()) {
        let mu = spectra.mu_x(l).unwrap_or(f64::NAN);
        for s_y in 0..=search.s_max {
            if !y_ok[s_y as usize] {
                continue;
            }
            let y = lambda_parameters(beta, params.m, mu, s_y)?;
            for s_t in 0..=search.s_max {
                if !t_ok[s_t as usize] {
                    continue;
                }
                let t = lambda_parameters(gamma, params.k, 0.0, s_t)?;
                if matches(y.lambda() + t.lambda(), lambda) {
                    return Ok(Some(ModeIndexA { l, s_y, s_t }));
                }
            }
        }
    }
    Ok(None)
}

/// Runs the residual, boundary and nonlocal checks on an assembled witness.
pub fn check_witness(field: &SolutionField) -> Result<WitnessChecks, ClassifyError> {
    let params = &field.params;
    let pde_residual = pde_residual_analytic(field, &GridSpec::default())?.sup_norm;
    let boundary = boundary_sup(field, &field.boundary_surfaces(), 41)?;
    let nonlocal = match params.variant {
        Variant::ProblemA => nonlocal_defect(field, params.beta()?, NonlocalAxis::Y)?
            .max(nonlocal_defect(field, params.gamma()?, NonlocalAxis::Time)?),
        _ => nonlocal_defect(field, params.alpha()?, NonlocalAxis::Time)?,
    };
    let boundary_tol = if params.x_conditions() == BoundaryKind::DIRICHLET
        && params.y_conditions() == BoundaryKind::DIRICHLET
    {
        DEFECT_TOLERANCE
    } else {
        SHOOTING_BOUNDARY_TOLERANCE
    };
    Ok(WitnessChecks {
        pde_residual,
        boundary,
        nonlocal,
        passed: pde_residual < RESIDUAL_TOLERANCE
            && boundary < boundary_tol
            && nonlocal < DEFECT_TOLERANCE,
    })
}

/// Reusable classifier for one problem: spatial spectra are computed once.
#[derive(Debug, Clone)]
pub struct Classifier {
    spectra: Spectra,
    search: SearchBox,
}

impl Classifier {
    pub fn new(params: &ProblemParams, search: SearchBox) -> Result<Self, ClassifyError> {
        search.validate()?;
        let p_max = if params.variant == Variant::ProblemA {
            0
        } else {
            search.p_max
        };
        Ok(Self {
            spectra: Spectra::new(params, search.l_max, p_max)?,
            search,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        self.spectra.params()
    }

    pub fn spectra(&self) -> &Spectra {
        &self.spectra
    }

    /// Same spectra, different nonlocal coefficients.
    pub fn retarget(&self, params: &ProblemParams) -> Result<Self, ClassifyError> {
        Ok(Self {
            spectra: self.spectra.retarget(params)?,
            search: self.search,
        })
    }

    pub fn verdict(&self, lambda: Complex64) -> Result<UniquenessVerdict, ClassifyError> {
        if !(lambda.re.is_finite() && lambda.im.is_finite()) {
            return Err(ClassifyError::NonFiniteLambda);
        }
        let params = self.params();
        let region = theorem_region(params)?;
        let mut verdict = UniquenessVerdict {
            status: VerdictStatus::Indeterminate,
            theorem: theorem(params),
            lambda,
            theorem_region: region,
            witness: None,
            checks: None,
        };
        if region && lambda.re >= 0.0 {
            verdict.status = VerdictStatus::UniqueGuaranteed;
            return Ok(verdict);
        }
        let candidate = match params.variant {
            Variant::ProblemA => witness_a_in(&self.spectra, lambda, self.search)?.map(|i| {
                Ok::<_, ClassifyError>((Witness::ProblemA(i), self.spectra.mode_a(i, 0.5)?))
            }),
            _ => witness_in(&self.spectra, lambda, self.search)?
                .map(|i| Ok((Witness::Problem1(i), self.spectra.mode(i)?))),
        }
        .transpose()?;
        if let Some((witness, field)) = candidate {
            let checks = check_witness(&field)?;
            verdict.checks = Some(checks);
            if checks.passed {
                verdict.status = VerdictStatus::NontrivialExists;
                verdict.witness = Some(witness);
            }
        }
        Ok(verdict)
    }
}

/// Classifies `(params, lambda)` with the default search box.
pub fn uniqueness_verdict(
    params: &ProblemParams,
    lambda: Complex64,
) -> Result<UniquenessVerdict, ClassifyError> {
    uniqueness_verdict_in(params, lambda, SearchBox::default())
}

pub fn uniqueness_verdict_in(
    params: &ProblemParams,
    lambda: Complex64,
    search: SearchBox,
) -> Result<UniquenessVerdict, ClassifyError> {
    Classifier::new(params, search)?.verdict(lambda)
}

/// Square lattice over `[-r_max, r_max]^2` in the `alpha` plane, restricted
/// to `0 < |alpha| <= r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaLattice {
    pub r_max: f64,
    pub points: usize,
}

impl AlphaLattice {
    pub fn nodes(&self) -> Result<Vec<(f64, f64)>, ClassifyError> {
        if !(self.r_max.is_finite() && self.r_max > 0.0 && self.points >= 2) {
            return Err(ClassifyError::InvalidLattice);
        }
        let half = (self.points - 1) as f64;
        let step = |i: usize| self.r_max * ((2 * i) as f64 - half) / half;
        let mut out = Vec::new();
        for j in 0..self.points {
            for i in 0..self.points {
                let (re, im) = (step(i), step(j));
                let r = re.hypot(im);
                if r > 0.0 && r <= self.r_max {
                    out.push((re, im));
                }
            }
        }
        Ok(out)
    }
}

/// One row of an `alpha`-plane scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub l: usize,
    pub p: usize,
    pub s: u32,
    pub verdict: VerdictStatus,
    pub theorem_region: bool,
}

/// Classifies the spectral parameter of `mode` at each lattice point.
/// Rows follow the lattice order (`alpha_re` fastest).
pub fn scan_alpha_plane(
    n: f64,
    m: f64,
    k: f64,
    lattice: AlphaLattice,
    search: SearchBox,
    mode: ModeIndex,
) -> Result<Vec<ScanRow>, ClassifyError> {
    let nodes = lattice.nodes()?;
    if mode.l > search.l_max
        || mode.p > search.p_max
        || mode.s > search.s_max
        || mode.l == 0
        || mode.p == 0
    {
        return Err(ClassifyError::InvalidBox);
    }
    let seed = ProblemParams::problem1(n, m, k, NonlocalCoefficient::real(1.0)?)?;
    let base = Classifier::new(&seed, search)?;
    nodes
        .par_iter()
        .map(|&(re, im)| {
            let alpha = NonlocalCoefficient::new(re, im)?;
            let params = ProblemParams::problem1(n, m, k, alpha)?;
            let classifier = base.retarget(&params)?;
            let mu = base.spectra.mu_x(mode.l).unwrap_or(f64::NAN)
                + base.spectra.mu_y(mode.p).unwrap_or(f64::NAN);
            let lambda = lambda_parameters(alpha, k, mu, mode.s)?.lambda();
            let v = classifier.verdict(lambda)?;
            Ok(ScanRow {
                alpha_re: re,
                alpha_im: im,
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                l: mode.l,
                p: mode.p,
                s: mode.s,
                verdict: v.status,
                theorem_region: v.theorem_region,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solution::build_mode_solution;

    fn coeff(re: f64, im: f64) -> NonlocalCoefficient {
        NonlocalCoefficient::new(re, im).unwrap()
    }

    fn params(alpha: NonlocalCoefficient) -> ProblemParams {
        ProblemParams::problem1(1.0, 1.0, 1.0, alpha).unwrap()
    }

    #[test]
    fn positive_lambda_in_region_is_unique() {
        let v = uniqueness_verdict(&params(coeff(0.5, 0.0)), Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(v.status, VerdictStatus::UniqueGuaranteed);
        assert_eq!(v.theorem, Theorem::T1);
        assert!(v.witness.is_none());
    }

    #[test]
    fn generated_lambda_has_witness() {
        let p = params(coeff(0.5, 0.0));
        let lambda = build_mode_solution(&p, 1, 1, 2).unwrap().lambda;
        assert!(lambda.re < 0.0);
        let v = uniqueness_verdict(&p, lambda).unwrap();
        assert_eq!(v.status, VerdictStatus::NontrivialExists);
        assert_eq!(v.witness, Some(Witness::Problem1(ModeIndex::new(1, 1, 2))));
        assert!(v.checks.unwrap().passed);
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(NonlocalCoefficient::new(0.0, 0.0).is_err());
    }

    #[test]
    fn absent_witnesses() {
        let p = params(coeff(0.5, 0.0));
        let sb = SearchBox::default();
        assert_eq!(
            nontrivial_witness(&p, Complex64::new(1.0, 0.0), sb).unwrap(),
            None
        );
        let lambda = build_mode_solution(&p, 1, 1, 2).unwrap().lambda;
        let off = Complex64::new(lambda.re, lambda.im + 0.5);
        assert_eq!(nontrivial_witness(&p, off, sb).unwrap(), None);
        // Odd shifts are not admissible for a real positive coefficient.
        let odd = build_mode_solution(&p, 1, 1, 3).unwrap().lambda;
        assert_eq!(nontrivial_witness(&p, odd, sb).unwrap(), None);
        let v = uniqueness_verdict(&p, odd).unwrap();
        assert_eq!(v.status, VerdictStatus::Indeterminate);
    }

    #[test]
    fn outside_region_without_witness_is_indeterminate() {
        let v = uniqueness_verdict(&params(coeff(1.5, 0.0)), Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(v.status, VerdictStatus::Indeterminate);
        assert!(!v.theorem_region);
    }

    #[test]
    fn problem_a_witness() {
        let pa = ProblemParams::problem_a(1.0, 2.0, 1.0, coeff(0.5, 0.0), coeff(0.6, 0.0)).unwrap();
        let sb = SearchBox::default();
        let f = Spectra::new(&pa, 3, 0)
            .unwrap()
            .mode_a(
                ModeIndexA {
                    l: 2,
                    s_y: 2,
                    s_t: 4,
                },
                0.5,
            )
            .unwrap();
        let w = nontrivial_witness_a(&pa, f.lambda, sb).unwrap().unwrap();
        // Commensurate exponents let several (s_y, s_t) share one Lambda;
        // whichever is found must reproduce it.
        let g = Spectra::new(&pa, 3, 0).unwrap().mode_a(w, 0.5).unwrap();
        assert!((g.lambda - f.lambda).norm() < 1e-9);
        let v = uniqueness_verdict(&pa, f.lambda).unwrap();
        assert_eq!(v.status, VerdictStatus::NontrivialExists);
        assert_eq!(v.theorem, Theorem::T2);
        let u = uniqueness_verdict(&pa, Complex64::new(0.5, 1.0)).unwrap();
        assert_eq!(u.status, VerdictStatus::UniqueGuaranteed);
    }

    #[test]
    fn scan_shape_and_consistency() {
        let lattice = AlphaLattice {
            r_max: 2.0,
            points: 9,
        };
        let rows = scan_alpha_plane(
            1.0,
            1.0,
            1.0,
            lattice,
            SearchBox::default(),
            ModeIndex::new(1, 1, 0),
        )
        .unwrap();
        assert!(rows.len() <= 81 && !rows.is_empty());
        for r in &rows {
            assert!(!(r.alpha_re == 0.0 && r.alpha_im == 0.0));
            if r.theorem_region {
                assert!(r.lambda_re < 0.0);
                assert_ne!(r.verdict, VerdictStatus::UniqueGuaranteed);
            }
        }
        let unit = rows
            .iter()
            .find(|r| r.alpha_re == 1.0 && r.alpha_im == 0.0)
            .unwrap();
        let mu = Spectra::new(&params(coeff(1.0, 0.0)), 1, 1).unwrap();
        assert!((unit.lambda_re + mu.mu_x(1).unwrap() + mu.mu_y(1).unwrap()).abs() < 1e-12);
        let again = scan_alpha_plane(
            1.0,
            1.0,
            1.0,
            lattice,
            SearchBox::default(),
            ModeIndex::new(1, 1, 0),
        )
        .unwrap();
        assert_eq!(rows, again);
    }
}
