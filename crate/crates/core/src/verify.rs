//! Numerical checks of assembled fields: equation residuals (analytic and
//! finite-difference), boundary and nonlocal defects, and the energy identity
//! behind the uniqueness argument.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::solution::{
    build_mode_solution_a_shifts, literal_problem_a_lambda, EquationForm, Field, LambdaSplit,
    ModeIndexA, Partials, Point, ProblemParams, SolutionError, SolutionField, Surface,
    SurfaceQuantity, Variant,
};
use crate::temporal::NonlocalCoefficient;

/// Default interior margin for residual grids.
pub const DEFAULT_OFFSET: f64 = 1e-3;
/// Default nodes per axis for residual grids.
pub const DEFAULT_GRID: usize = 21;
/// Samples per axis on boundary faces and nonlocal planes.
pub const DEFAULT_SURFACE_SAMPLES: usize = 41;
/// Default Simpson panels per axis.
pub const DEFAULT_PANELS: usize = 128;
/// Defect level above which the energy identity is not attempted.
pub const ENERGY_PRECONDITION: f64 = 1e-8;
/// Residual level accepted as "solves the equation".
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("grid needs at least 2 nodes per axis and 0 <= offset < 1/2")]
    InvalidGrid,
    #[error("step {h} puts stencils outside the cube (grid offset {offset})")]
    StencilOutOfDomain { h: f64, offset: f64 },
    #[error("finite-difference study needs positive steps")]
    InvalidSteps,
    #[error("Simpson quadrature needs an even, positive panel count, got {0}")]
    InvalidPanels(usize),
    #[error("boundary defect {boundary:e} or nonlocal defect {nonlocal:e} exceeds {tolerance:e}")]
    Precondition {
        boundary: f64,
        nonlocal: f64,
        tolerance: f64,
    },
    #[error("{0}")]
    NotApplicable(&'static str),
}

impl VerifyError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, VerifyError::Solution(e) if e.is_numerical())
    }
}

/// Uniform tensor grid on `[offset, 1 - offset]^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub offset: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::cube(DEFAULT_GRID, DEFAULT_OFFSET)
    }
}

impl GridSpec {
    pub fn cube(nodes: usize, offset: f64) -> Self {
        Self {
            nx: nodes,
            ny: nodes,
            nt: nodes,
            offset,
        }
    }

    fn validate(&self) -> Result<(), VerifyError> {
        let ok = self.nx >= 2
            && self.ny >= 2
            && self.nt >= 2
            && self.offset.is_finite()
            && (0.0..0.5).contains(&self.offset);
        if ok {
            Ok(())
        } else {
            Err(VerifyError::InvalidGrid)
        }
    }

    fn axis(&self, nodes: usize) -> Vec<f64> {
        let span = 1.0 - 2.0 * self.offset;
        (0..nodes)
            .map(|i| self.offset + span * i as f64 / (nodes - 1) as f64)
            .collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.axis(self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        self.axis(self.ny)
    }

    pub fn ts(&self) -> Vec<f64> {
        self.axis(self.nt)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn point(&self, xs: &[f64], ys: &[f64], ts: &[f64], i: usize) -> Point {
        let ix = i % self.nx;
        let iy = (i / self.nx) % self.ny;
        let it = i / (self.nx * self.ny);
        Point::new(xs[ix], ys[iy], ts[it])
    }

    fn volume(&self) -> f64 {
        (1.0 - 2.0 * self.offset).powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub sup_norm: f64,
    /// Discrete `L2` norm over the grid box.
    pub l2_norm: f64,
    pub worst_point: Point,
    pub convergence_order: Option<f64>,
}

/// Residual reports for each finite-difference step, with the fitted order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdStudy {
    pub steps: Vec<f64>,
    pub reports: Vec<ResidualReport>,
    pub convergence_order: Option<f64>,
}

impl FdStudy {
    /// Report for the smallest step, carrying the fitted order.
    pub fn finest(&self) -> ResidualReport {
        let i = (0..self.steps.len())
            .min_by(|&a, &b| self.steps[a].total_cmp(&self.steps[b]))
            .expect("study has at least one step");
        ResidualReport {
            convergence_order: self.convergence_order,
            ..self.reports[i]
        }
    }
}

fn summarize(
    grid: &GridSpec,
    points: impl Fn(usize) -> Point,
    residuals: &[f64],
) -> ResidualReport {
    let mut sup = 0.0;
    let mut worst = 0;
    let mut sq = 0.0;
    for (i, &r) in residuals.iter().enumerate() {
        if r > sup {
            sup = r;
            worst = i;
        }
        sq += r * r;
    }
    let l2 = (sq / residuals.len() as f64 * grid.volume()).sqrt();
    ResidualReport {
        sup_norm: sup,
        l2_norm: l2,
        worst_point: points(worst),
        convergence_order: None,
    }
}

/// Residual of the field's governing equation from the given partials.
pub fn residual_at(
    form: EquationForm,
    n: f64,
    m: f64,
    k: f64,
    lambda: Complex64,
    p: Point,
    d: &Partials,
) -> Complex64 {
    let xn = p.x.powf(n);
    let ym = p.y.powf(m);
    let tk = p.t.powf(k);
    match form {
        EquationForm::Parabolic => {
            xn * ym * d.u_t - tk * ym * d.u_xx - tk * xn * d.u_yy + lambda * (tk * xn * ym) * d.u
        }
        EquationForm::TwoCondition => {
            tk * ym * d.u_xx - tk * xn * d.u_y - xn * ym * d.u_t - lambda * (xn * ym * tk) * d.u
        }
    }
}

/// Residual with analytic partials at every node of `grid`.
pub fn pde_residual_analytic(
    field: &impl Field,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    grid.validate()?;
    let (xs, ys, ts) = (grid.xs(), grid.ys(), grid.ts());
    let eq = field.equation();
    let samples = field.sample_grid(&xs, &ys, &ts)?;
    let residuals: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let p = grid.point(&xs, &ys, &ts, i);
            residual_at(eq.form, eq.n, eq.m, eq.k, eq.lambda, p, d).norm()
        })
        .collect();
    Ok(summarize(
        grid,
        |i| grid.point(&xs, &ys, &ts, i),
        &residuals,
    ))
}

fn fd_partials(field: &impl Field, p: Point, h: f64) -> Result<Partials, SolutionError> {
    let f = |x: f64, y: f64, t: f64| field.value(Point::new(x, y, t));
    let u = f(p.x, p.y, p.t)?;
    let (xp, xm) = (f(p.x + h, p.y, p.t)?, f(p.x - h, p.y, p.t)?);
    let (yp, ym) = (f(p.x, p.y + h, p.t)?, f(p.x, p.y - h, p.t)?);
    let (tp, tm) = (f(p.x, p.y, p.t + h)?, f(p.x, p.y, p.t - h)?);
    let h2 = h * h;
    Ok(Partials {
        u,
        u_x: (xp - xm) / (2.0 * h),
        u_y: (yp - ym) / (2.0 * h),
        u_t: (tp - tm) / (2.0 * h),
        u_xx: (xp - 2.0 * u + xm) / h2,
        u_yy: (yp - 2.0 * u + ym) / h2,
    })
}

/// Least-squares slope of `ln e` against `ln h`. `None` if fewer than two
/// usable points.
pub fn fitted_order(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Residual with every partial replaced by a centred difference of field
/// values, for each step in `steps`.
pub fn pde_residual_fd(
    field: &impl Field,
    grid: &GridSpec,
    steps: &[f64],
) -> Result<FdStudy, VerifyError> {
    grid.validate()?;
    if steps.is_empty() || steps.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(VerifyError::InvalidSteps);
    }
    for &h in steps {
        if h > grid.offset {
            return Err(VerifyError::StencilOutOfDomain {
                h,
                offset: grid.offset,
            });
        }
    }
    let (xs, ys, ts) = (grid.xs(), grid.ys(), grid.ts());
    let eq = field.equation();
    let mut reports = Vec::with_capacity(steps.len());
    for &h in steps {
        let residuals: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let p = grid.point(&xs, &ys, &ts, i);
                let d = fd_partials(field, p, h)?;
                Ok(residual_at(eq.form, eq.n, eq.m, eq.k, eq.lambda, p, &d).norm())
            })
            .collect::<Result<_, SolutionError>>()?;
        reports.push(summarize(
            grid,
            |i| grid.point(&xs, &ys, &ts, i),
            &residuals,
        ));
    }
    let sups: Vec<f64> = reports.iter().map(|r| r.sup_norm).collect();
    Ok(FdStudy {
        steps: steps.to_vec(),
        convergence_order: fitted_order(steps, &sups),
        reports,
    })
}

fn unit_axis(samples: usize) -> Vec<f64> {
    if samples <= 1 {
        return vec![0.5];
    }
    (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect()
}

fn surface_sup(field: &impl Field, surface: Surface, samples: usize) -> Result<f64, VerifyError> {
    let a = unit_axis(samples);
    let quantity = field.surface_quantity(surface);
    let (xs, ys): (Vec<f64>, Vec<f64>) = match surface {
        Surface::S2 => (vec![1.0], a.clone()),
        Surface::S4 => (vec![0.0], a.clone()),
        Surface::S3 => (a.clone(), vec![0.0]),
        Surface::S5 => (a.clone(), vec![1.0]),
    };
    let normal_is_x = matches!(surface, Surface::S2 | Surface::S4);
    let grid = field.sample_grid(&xs, &ys, &a)?;
    Ok(grid
        .iter()
        .map(|d| match quantity {
            SurfaceQuantity::Value => d.u.norm(),
            SurfaceQuantity::NormalDerivative if normal_is_x => d.u_x.norm(),
            SurfaceQuantity::NormalDerivative => d.u_y.norm(),
        })
        .fold(0.0, f64::max))
}

/// Largest boundary defect (value, or normal derivative where the field's
/// problem prescribes one) over `samples x samples` grids on each face.
pub fn boundary_sup(
    field: &impl Field,
    surfaces: &[Surface],
    samples: usize,
) -> Result<f64, VerifyError> {
    let mut sup = 0.0f64;
    for &s in surfaces {
        sup = sup.max(surface_sup(field, s, samples)?);
    }
    Ok(sup)
}

/// Axis of a nonlocal condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NonlocalAxis {
    Time,
    Y,
}

/// `sup |u|_{plane 0} - c u|_{plane 1}|` over a `samples x samples` grid.
pub fn nonlocal_defect_sampled(
    field: &impl Field,
    coefficient: NonlocalCoefficient,
    axis: NonlocalAxis,
    samples: usize,
) -> Result<f64, VerifyError> {
    let a = unit_axis(samples);
    let c = coefficient.to_complex();
    let ends = [0.0, 1.0];
    let grid = match axis {
        NonlocalAxis::Time => field.sample_grid(&a, &a, &ends)?,
        NonlocalAxis::Y => field.sample_grid(&a, &ends, &a)?,
    };
    let na = a.len();
    let mut sup = 0.0f64;
    match axis {
        NonlocalAxis::Time => {
            for i in 0..na * na {
                sup = sup.max((grid[i].u - c * grid[na * na + i].u).norm());
            }
        }
        NonlocalAxis::Y => {
            for it in 0..na {
                for ix in 0..na {
                    let lo = grid[(it * 2) * na + ix].u;
                    let hi = grid[(it * 2 + 1) * na + ix].u;
                    sup = sup.max((lo - c * hi).norm());
                }
            }
        }
    }
    Ok(sup)
}

/// [`nonlocal_defect_sampled`] on the default 41 x 41 grid.
pub fn nonlocal_defect(
    field: &impl Field,
    coefficient: NonlocalCoefficient,
    axis: NonlocalAxis,
) -> Result<f64, VerifyError> {
    nonlocal_defect_sampled(field, coefficient, axis, DEFAULT_SURFACE_SAMPLES)
}

/// Terms of the energy identity
/// `1/2 (1 - |alpha|^2) int x^n y^m |u(x,y,1)|^2
///  + int t^k y^m |u_x|^2 + t^k x^n |u_y|^2 + lambda_1 t^k x^n y^m |u|^2 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub panels: usize,
    pub surface_term: f64,
    pub volume_term: f64,
    /// The `lambda_1`-weighted part of `volume_term`.
    pub lambda_term: f64,
    pub sum: f64,
    /// `|sum(N) - sum(N/2)|`.
    pub quadrature_error_estimate: f64,
    /// `(panels, sum)` for `N`, `N/2`, `N/4` where defined.
    pub refinement: Vec<(usize, f64)>,
    /// Fitted order of `|sum|` against panel width over `refinement`.
    pub refinement_order: Option<f64>,
    pub boundary_defect: f64,
    pub nonlocal_defect: f64,
}

fn simpson_weights(panels: usize, stride: usize) -> Vec<f64> {
    // Weights on the fine grid of `panels` intervals for the coarse rule
    // using every `stride`-th node; zero elsewhere.
    let coarse = panels / stride;
    let h = 1.0 / coarse as f64;
    let mut w = vec![0.0; panels + 1];
    for j in 0..=coarse {
        let c = if j == 0 || j == coarse {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w[j * stride] = c * h / 3.0;
    }
    w
}

struct SliceIntegrals {
    /// `int x^n y^m |u|^2` per level.
    mass: Vec<f64>,
    /// `int y^m |u_x|^2 + x^n |u_y|^2` per level.
    gradient: Vec<f64>,
}

/// Evaluates the energy identity with composite Simpson quadrature on
/// `panels` intervals per axis. Needs an even panel count; the refinement
/// study uses the halved and quartered rules on the same nodes.
pub fn energy_identity(field: &impl Field, panels: usize) -> Result<EnergyReport, VerifyError> {
    if panels < 2 || panels % 2 != 0 {
        return Err(VerifyError::InvalidPanels(panels));
    }
    let eq = field.equation();
    if eq.form != EquationForm::Parabolic {
        return Err(VerifyError::NotApplicable(
            "the energy identity applies to the parabolic problem only",
        ));
    }
    let alpha = field.time_coefficient().ok_or(VerifyError::NotApplicable(
        "field has no nonlocal condition in t",
    ))?;
    let boundary = boundary_sup(field, &field.boundary_surfaces(), DEFAULT_SURFACE_SAMPLES)?;
    let nonlocal = nonlocal_defect(field, alpha, NonlocalAxis::Time)?;
    if !(boundary < ENERGY_PRECONDITION && nonlocal < ENERGY_PRECONDITION) {
        return Err(VerifyError::Precondition {
            boundary,
            nonlocal,
            tolerance: ENERGY_PRECONDITION,
        });
    }

    let mut strides = vec![1usize];
    while strides.len() < 3 {
        let next = strides[strides.len() - 1] * 2;
        if panels % (2 * next) != 0 {
            break;
        }
        strides.push(next);
    }
    let weights: Vec<Vec<f64>> = strides
        .iter()
        .map(|&s| simpson_weights(panels, s))
        .collect();
    let nodes: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
    let xn: Vec<f64> = nodes.iter().map(|x| x.powf(eq.n)).collect();
    let ym: Vec<f64> = nodes.iter().map(|y| y.powf(eq.m)).collect();
    let np = panels + 1;

    let slices: Vec<SliceIntegrals> = nodes
        .par_iter()
        .map(|&t| {
            let g = field.sample_grid(&nodes, &nodes, &[t])?;
            let mut mass = vec![0.0; weights.len()];
            let mut gradient = vec![0.0; weights.len()];
            for (lv, w) in weights.iter().enumerate() {
                let (mut a, mut b) = (0.0, 0.0);
                for iy in 0..np {
                    if w[iy] == 0.0 {
                        continue;
                    }
                    let (mut ra, mut rb) = (0.0, 0.0);
                    for ix in 0..np {
                        if w[ix] == 0.0 {
                            continue;
                        }
                        let d = &g[iy * np + ix];
                        ra += w[ix] * xn[ix] * ym[iy] * d.u.norm_sqr();
                        rb += w[ix] * (ym[iy] * d.u_x.norm_sqr() + xn[ix] * d.u_y.norm_sqr());
                    }
                    a += w[iy] * ra;
                    b += w[iy] * rb;
                }
                mass[lv] = a;
                gradient[lv] = b;
            }
            Ok(SliceIntegrals { mass, gradient })
        })
        .collect::<Result<_, SolutionError>>()?;

    let lambda_1 = eq.lambda.re;
    let surface_factor = 0.5 * (1.0 - alpha.modulus_squared());
    let top = &slices[panels];
    let mut levels = Vec::with_capacity(strides.len());
    for (lv, w) in weights.iter().enumerate() {
        let (mut grad, mut mass) = (0.0, 0.0);
        for (it, s) in slices.iter().enumerate() {
            if w[it] == 0.0 {
                continue;
            }
            let tk = nodes[it].powf(eq.k);
            grad += w[it] * tk * s.gradient[lv];
            mass += w[it] * tk * s.mass[lv];
        }
        let surface = surface_factor * top.mass[lv];
        let lambda_term = lambda_1 * mass;
        levels.push((surface, grad + lambda_term, lambda_term));
    }

    let sums: Vec<f64> = levels.iter().map(|(s, v, _)| s + v).collect();
    let refinement: Vec<(usize, f64)> = strides
        .iter()
        .zip(&sums)
        .map(|(&s, &sum)| (panels / s, sum))
        .collect();
    let widths: Vec<f64> = refinement.iter().map(|(p, _)| 1.0 / *p as f64).collect();
    let abs_sums: Vec<f64> = sums.iter().map(|s| s.abs()).collect();
    let (surface_term, volume_term, lambda_term) = levels[0];
    Ok(EnergyReport {
        panels,
        surface_term,
        volume_term,
        lambda_term,
        sum: surface_term + volume_term,
        quadrature_error_estimate: if sums.len() > 1 {
            (sums[0] - sums[1]).abs()
        } else {
            f64::NAN
        },
        refinement_order: if refinement.len() > 2 {
            fitted_order(&widths, &abs_sums)
        } else {
            None
        },
        refinement,
        boundary_defect: boundary,
        nonlocal_defect: nonlocal,
    })
}

/// One candidate split in the Problem-A study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCandidate {
    pub theta: f64,
    pub split: LambdaSplit,
    pub lambda: Complex64,
    pub residual: ResidualReport,
}

/// Outcome of the Problem-A split study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAdjudication {
    pub index: ModeIndexA,
    pub mu: f64,
    pub candidates: Vec<SplitCandidate>,
    /// `Lambda` with `-mu` in both real parts and unshifted imaginary parts,
    /// evaluated against the same field.
    pub literal: SplitCandidate,
    /// Smallest `theta` whose residual is below the tolerance.
    pub selected: Option<f64>,
    /// Whether exactly one candidate passes.
    pub identifiable: bool,
    pub tolerance: f64,
    pub y_defect: f64,
    pub t_defect: f64,
}

/// Builds `U_ls` under each `theta` and measures the two-condition residual.
pub fn adjudicate_split_a(
    params: &ProblemParams,
    index: ModeIndexA,
    thetas: &[f64],
    grid: &GridSpec,
) -> Result<SplitAdjudication, VerifyError> {
    if params.variant != Variant::ProblemA {
        return Err(SolutionError::WrongVariant {
            expected: "problem A",
            found: params.variant,
        }
        .into());
    }
    let mut candidates = Vec::with_capacity(thetas.len());
    let mut reference: Option<SolutionField> = None;
    for &theta in thetas {
        let f = build_mode_solution_a_shifts(params, index, theta)?;
        let residual = pde_residual_analytic(&f, grid)?;
        candidates.push(SplitCandidate {
            theta,
            split: f.split.expect("problem A fields carry a split"),
            lambda: f.lambda,
            residual,
        });
        reference.get_or_insert(f);
    }
    let base = match reference {
        Some(f) => f,
        None => build_mode_solution_a_shifts(params, index, 0.5)?,
    };
    let mu = base.terms[0].x.mu();
    let literal_split = literal_problem_a_lambda(params, mu)?;
    let mut literal_field = base.clone();
    literal_field.lambda = literal_split.total();
    let literal = SplitCandidate {
        theta: f64::NAN,
        split: literal_split,
        lambda: literal_field.lambda,
        residual: pde_residual_analytic(&literal_field, grid)?,
    };
    let passing: Vec<f64> = candidates
        .iter()
        .filter(|c| c.residual.sup_norm < RESIDUAL_TOLERANCE)
        .map(|c| c.theta)
        .collect();
    let y_defect = nonlocal_defect(&base, params.beta()?, NonlocalAxis::Y)?;
    let t_defect = nonlocal_defect(&base, params.gamma()?, NonlocalAxis::Time)?;
    Ok(SplitAdjudication {
        index,
        mu,
        selected: passing.iter().copied().reduce(f64::min),
        identifiable: passing.len() == 1,
        candidates,
        literal,
        tolerance: RESIDUAL_TOLERANCE,
        y_defect,
        t_defect,
    })
}
