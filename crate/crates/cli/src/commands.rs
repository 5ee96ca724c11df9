use std::fmt::Display;

use num_complex::Complex64;
use thiserror::Error;

use degpar::classify::{
    uniqueness_verdict_in, AlphaLattice, ClassifyError, SearchBox, Witness, LAMBDA_MATCH_TOLERANCE,
};
use degpar::solution::{
    Field, ModeIndex, ModeIndexA, ProblemParams, SolutionError, SolutionField, Spectra, Surface,
    Variant,
};
use degpar::special::{bessel_roots, BesselError, BesselOrder, ROOT_TOLERANCE};
use degpar::spectrum::{
    shooting_eigenvalues, spatial_eigenvalues, BoundaryKind, SpectrumError, SHOOTING_STEP,
};
use degpar::temporal::{
    lambda_parameters_with_branch, AngleBranch, NonlocalCoefficient, TemporalError,
    ADMISSIBILITY_TOLERANCE,
};
use degpar::verify::{
    adjudicate_split_a, boundary_sup, energy_identity, nonlocal_defect_sampled,
    pde_residual_analytic, pde_residual_fd, GridSpec, NonlocalAxis, VerifyError,
    ENERGY_PRECONDITION, RESIDUAL_TOLERANCE,
};

use crate::args::{
    AdjudicateArgs, Branch, ClassifyArgs, EigenArgs, EigenMethod, LambdaArgs, ModeArgs,
    ProblemArgs, RootsArgs, ScanArgs, SolveArgs, VerifyArgs,
};
use crate::output::{Body, Cell, Record, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }

    fn sort(numerical: bool, e: impl Display) -> Self {
        if numerical {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

macro_rules! cli_error_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::sort(e.is_numerical(), e)
            }
        }
    )*};
}

cli_error_from!(
    BesselError,
    SpectrumError,
    SolutionError,
    VerifyError,
    ClassifyError
);

impl From<TemporalError> for CliError {
    fn from(e: TemporalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn coefficient(name: &str, v: Option<(f64, f64)>) -> Result<NonlocalCoefficient, CliError> {
    let (re, im) = v.ok_or_else(|| invalid(format!("--{name} is required for this problem")))?;
    NonlocalCoefficient::new(re, im).map_err(|e| invalid(format!("--{name}: {e}")))
}

fn complex_cell(c: (f64, f64)) -> Cell {
    Cell::Str(format!(
        "{},{}",
        crate::output::fmt_f64(c.0),
        crate::output::fmt_f64(c.1)
    ))
}

fn params_of(p: &ProblemArgs) -> Result<ProblemParams, CliError> {
    let params = match p.variant() {
        Variant::ProblemA => {
            if p.alpha.is_some() {
                return Err(invalid("problem A takes --beta and --gamma, not --alpha"));
            }
            ProblemParams::problem_a(
                p.n,
                p.m,
                p.k,
                coefficient("beta", p.beta)?,
                coefficient("gamma", p.gamma)?,
            )?
        }
        variant => {
            if p.beta.is_some() || p.gamma.is_some() {
                return Err(invalid(format!(
                    "{variant} takes --alpha, not --beta/--gamma"
                )));
            }
            let alpha = coefficient("alpha", p.alpha)?;
            match variant {
                Variant::Mixed(q) => ProblemParams::mixed(q, p.n, p.m, p.k, alpha)?,
                _ => ProblemParams::problem1(p.n, p.m, p.k, alpha)?,
            }
        }
    };
    Ok(params)
}

impl ProblemArgs {
    fn variant(&self) -> Variant {
        self.problem
    }

    fn config(&self) -> Record {
        let mut c: Record = vec![
            ("problem".into(), variant_name(self.problem).into()),
            ("n".into(), self.n.into()),
            ("m".into(), self.m.into()),
            ("k".into(), self.k.into()),
        ];
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if let Some(v) = v {
                c.push((name.into(), complex_cell(v)));
            }
        }
        c
    }
}

fn variant_name(v: Variant) -> String {
    match v {
        Variant::Problem1 => "1".into(),
        Variant::Mixed(p) => format!("{p:?}"),
        Variant::ProblemA => "A".into(),
    }
}

enum BuiltMode {
    P1(ModeIndex),
    A(ModeIndexA),
}

fn mode_of(params: &ProblemParams, mode: &ModeArgs) -> Result<BuiltMode, CliError> {
    let idx = &mode.mode.0;
    match params.variant {
        Variant::ProblemA => {
            let (l, s_y, s_t) = match idx.as_slice() {
                [l, s] => (*l, *s, *s),
                [l, sy, st] => (*l, *sy, *st),
                _ => unreachable!("parser yields 2 or 3 indices"),
            };
            Ok(BuiltMode::A(ModeIndexA {
                l,
                s_y: shift(s_y)?,
                s_t: shift(s_t)?,
            }))
        }
        _ => match idx.as_slice() {
            [l, p, s] => Ok(BuiltMode::P1(ModeIndex::new(*l, *p, shift(*s)?))),
            _ => Err(invalid("--mode needs l,p,s for this problem")),
        },
    }
}

fn shift(s: usize) -> Result<u32, CliError> {
    u32::try_from(s).map_err(|_| invalid(format!("shift {s} too large")))
}

fn build(params: &ProblemParams, mode: &ModeArgs) -> Result<SolutionField, CliError> {
    Ok(match mode_of(params, mode)? {
        BuiltMode::P1(i) => {
            if i.l == 0 || i.p == 0 {
                return Err(invalid("mode indices l and p start at 1"));
            }
            Spectra::new(params, i.l, i.p)?.mode(i)?
        }
        BuiltMode::A(i) => {
            if i.l == 0 {
                return Err(invalid("mode index l starts at 1"));
            }
            Spectra::new(params, i.l, 0)?.mode_a(i, mode.theta)?
        }
    })
}

fn mode_config(params: &ProblemParams, mode: &ModeArgs) -> Record {
    let idx: Vec<String> = mode.mode.0.iter().map(|i| i.to_string()).collect();
    let mut c: Record = vec![("mode".into(), idx.join(",").into())];
    if params.variant == Variant::ProblemA {
        c.push(("theta".into(), mode.theta.into()));
    }
    c
}

fn field_record(field: &SolutionField) -> Record {
    vec![
        ("field.lambda_re".into(), field.lambda.re.into()),
        ("field.lambda_im".into(), field.lambda.im.into()),
        ("field.admissible".into(), field.admissible.into()),
    ]
}

pub fn roots(a: &RootsArgs) -> Result<Report, CliError> {
    let order = BesselOrder::new(a.nu)?;
    let table = bessel_roots(order, a.count)?;
    let rows = table
        .roots()
        .iter()
        .zip(table.residuals())
        .enumerate()
        .map(|(i, (&r, res))| vec![(i + 1).into(), r.into(), res.into()])
        .collect();
    Ok(Report {
        kind: "bessel roots",
        config: vec![
            ("nu".into(), a.nu.into()),
            ("count".into(), a.count.into()),
            ("tolerance".into(), ROOT_TOLERANCE.into()),
        ],
        body: Body::Table {
            columns: vec!["index", "root", "residual"],
            rows,
        },
    })
}

pub fn eigen(a: &EigenArgs) -> Result<Report, CliError> {
    let method = a.method.unwrap_or(if a.bc == BoundaryKind::DIRICHLET {
        EigenMethod::Closed
    } else {
        EigenMethod::Shooting
    });
    let rows: Vec<Vec<Cell>> = match method {
        EigenMethod::Closed => {
            if a.bc != BoundaryKind::DIRICHLET {
                return Err(invalid(format!(
                    "the closed form covers DD only; use --method shooting for {}",
                    a.bc
                )));
            }
            spatial_eigenvalues(a.exponent, a.count)?
                .iter()
                .map(|p| vec![p.index.into(), p.mu.into(), p.root.into()])
                .collect()
        }
        EigenMethod::Shooting => shooting_eigenvalues(a.exponent, a.bc, a.count)?
            .iter()
            .map(|f| vec![f.index.into(), f.mu.into(), Cell::Null])
            .collect(),
    };
    let method_name = match method {
        EigenMethod::Closed => "closed",
        EigenMethod::Shooting => "shooting",
    };
    let mut config: Record = vec![
        ("exponent".into(), a.exponent.into()),
        ("count".into(), a.count.into()),
        ("bc".into(), a.bc.to_string().into()),
        ("method".into(), method_name.into()),
    ];
    if method == EigenMethod::Shooting {
        config.push(("step".into(), SHOOTING_STEP.into()));
    }
    Ok(Report {
        kind: "spatial eigenvalues",
        config,
        body: Body::Table {
            columns: vec!["index", "mu", "root"],
            rows,
        },
    })
}

pub fn lambda(a: &LambdaArgs) -> Result<Report, CliError> {
    let alpha = NonlocalCoefficient::new(a.alpha.0, a.alpha.1)
        .map_err(|e| invalid(format!("--alpha: {e}")))?;
    let branch = match a.branch {
        Branch::Principal => AngleBranch::Principal,
        Branch::Arctan => AngleBranch::Arctan,
    };
    let shifts: Vec<u32> = match a.s {
        Some(s) => vec![s],
        None => (0..=a.s_max).collect(),
    };
    let mut config: Record = vec![
        ("alpha".into(), complex_cell(a.alpha)),
        ("k".into(), a.k.into()),
        (
            "branch".into(),
            match a.branch {
                Branch::Principal => "principal",
                Branch::Arctan => "arctan",
            }
            .into(),
        ),
        (
            "admissibility_tolerance".into(),
            ADMISSIBILITY_TOLERANCE.into(),
        ),
    ];
    let seeds: Vec<(Option<usize>, Option<usize>, f64)> = match (a.mu, a.n, a.m) {
        (Some(mu), _, _) => {
            config.push(("mu".into(), mu.into()));
            vec![(None, None, mu)]
        }
        (None, Some(n), Some(m)) => {
            config.extend([
                ("n".into(), n.into()),
                ("m".into(), m.into()),
                ("l_max".into(), a.l_max.into()),
                ("p_max".into(), a.p_max.into()),
            ]);
            let mx = spatial_eigenvalues(n, a.l_max)?;
            let my = spatial_eigenvalues(m, a.p_max)?;
            let mut v = Vec::new();
            for x in &mx {
                for y in &my {
                    v.push((Some(x.index), Some(y.index), x.mu + y.mu));
                }
            }
            v
        }
        _ => return Err(invalid("give either --mu or both --n and --m")),
    };
    if a.s.is_none() {
        config.push(("s_max".into(), a.s_max.into()));
    }
    let mut rows = Vec::new();
    for (l, p, mu) in seeds {
        for &s in &shifts {
            let mode = lambda_parameters_with_branch(alpha, a.k, mu, s, branch)?;
            let defect = mode.nonlocal_defect();
            rows.push(vec![
                l.into(),
                p.into(),
                s.into(),
                mu.into(),
                mode.lambda_re.into(),
                mode.lambda_im.into(),
                (defect < ADMISSIBILITY_TOLERANCE).into(),
                defect.into(),
            ]);
        }
    }
    Ok(Report {
        kind: "temporal spectral parameters",
        config,
        body: Body::Table {
            columns: vec![
                "l",
                "p",
                "s",
                "mu",
                "lambda_re",
                "lambda_im",
                "admissible",
                "nonlocal_defect",
            ],
            rows,
        },
    })
}

pub fn solve(a: &SolveArgs) -> Result<Report, CliError> {
    if a.samples < 2 {
        return Err(invalid("--samples must be at least 2"));
    }
    let params = params_of(&a.problem)?;
    let field = build(&params, &a.mode)?;
    let axis: Vec<f64> = (0..a.samples)
        .map(|i| i as f64 / (a.samples - 1) as f64)
        .collect();
    let grid = field.sample_grid(&axis, &axis, &axis)?;
    let ns = a.samples;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (x, y, t) = (axis[i % ns], axis[(i / ns) % ns], axis[i / (ns * ns)]);
            vec![
                x.into(),
                y.into(),
                t.into(),
                d.u.re.into(),
                d.u.im.into(),
                d.u.norm().into(),
            ]
        })
        .collect();
    let mut config = a.problem.config();
    config.extend(mode_config(&params, &a.mode));
    config.push(("samples".into(), a.samples.into()));
    config.extend(field_record(&field));
    Ok(Report {
        kind: "field samples",
        config,
        body: Body::Table {
            columns: vec!["x", "y", "t", "re", "im", "abs"],
            rows,
        },
    })
}

fn surfaces_cell(s: &[Surface]) -> Cell {
    let names: Vec<String> = s.iter().map(|s| format!("{s:?}")).collect();
    names.join(" ").into()
}

pub fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    let params = params_of(&a.problem)?;
    let field = build(&params, &a.mode)?;
    let grid = GridSpec::cube(a.grid, a.offset);
    let fd_grid = GridSpec::cube(a.fd_grid, a.fd_offset);

    let mut rec = field_record(&field);
    let pde = pde_residual_analytic(&field, &grid)?;
    rec.extend([
        ("pde.sup_norm".into(), pde.sup_norm.into()),
        ("pde.l2_norm".into(), pde.l2_norm.into()),
        ("pde.worst_x".into(), pde.worst_point.x.into()),
        ("pde.worst_y".into(), pde.worst_point.y.into()),
        ("pde.worst_t".into(), pde.worst_point.t.into()),
        (
            "pde.pass".into(),
            (pde.sup_norm < RESIDUAL_TOLERANCE).into(),
        ),
    ]);

    let fd = pde_residual_fd(&field, &fd_grid, &a.fd_steps)?;
    for (i, (h, r)) in fd.steps.iter().zip(&fd.reports).enumerate() {
        rec.push((format!("fd.step_{i}"), (*h).into()));
        rec.push((format!("fd.sup_norm_{i}"), r.sup_norm.into()));
    }
    rec.push(("fd.order".into(), fd.convergence_order.into()));

    let surfaces = field.boundary_surfaces();
    let boundary = boundary_sup(&field, &surfaces, a.surface_samples)?;
    rec.push(("boundary.surfaces".into(), surfaces_cell(&surfaces)));
    rec.push(("boundary.sup".into(), boundary.into()));

    if let Some(beta) = field.y_coefficient() {
        let d = nonlocal_defect_sampled(&field, beta, NonlocalAxis::Y, a.surface_samples)?;
        rec.push(("nonlocal.y".into(), d.into()));
    }
    if let Some(c) = field.time_coefficient() {
        let d = nonlocal_defect_sampled(&field, c, NonlocalAxis::Time, a.surface_samples)?;
        rec.push(("nonlocal.t".into(), d.into()));
    }

    match energy_identity(&field, a.panels) {
        Ok(e) => {
            rec.extend([
                ("energy.status".into(), "ok".into()),
                ("energy.surface_term".into(), e.surface_term.into()),
                ("energy.volume_term".into(), e.volume_term.into()),
                ("energy.lambda_term".into(), e.lambda_term.into()),
                ("energy.sum".into(), e.sum.into()),
                (
                    "energy.quadrature_error_estimate".into(),
                    e.quadrature_error_estimate.into(),
                ),
                ("energy.refinement_order".into(), e.refinement_order.into()),
                (
                    "energy.within_estimate".into(),
                    (e.sum.abs() <= e.quadrature_error_estimate).into(),
                ),
            ]);
            for (p, s) in &e.refinement {
                rec.push((format!("energy.sum_{p}"), (*s).into()));
            }
        }
        Err(e @ (VerifyError::Precondition { .. } | VerifyError::NotApplicable(_))) => {
            rec.push(("energy.status".into(), e.to_string().into()));
        }
        Err(e) => return Err(e.into()),
    }

    let mut config = a.problem.config();
    config.extend(mode_config(&params, &a.mode));
    config.extend([
        ("grid".into(), a.grid.into()),
        ("offset".into(), a.offset.into()),
        ("surface_samples".into(), a.surface_samples.into()),
        ("panels".into(), a.panels.into()),
        ("fd_grid".into(), a.fd_grid.into()),
        ("fd_offset".into(), a.fd_offset.into()),
        ("residual_tolerance".into(), RESIDUAL_TOLERANCE.into()),
        ("energy_precondition".into(), ENERGY_PRECONDITION.into()),
    ]);
    Ok(Report {
        kind: "mode verification",
        config,
        body: Body::Record(rec),
    })
}

fn search_box(l_max: usize, p_max: usize, s_max: u32) -> SearchBox {
    SearchBox {
        l_max,
        p_max,
        s_max,
    }
}

fn box_config(b: &SearchBox) -> Record {
    vec![
        ("l_max".into(), b.l_max.into()),
        ("p_max".into(), b.p_max.into()),
        ("s_max".into(), b.s_max.into()),
    ]
}

pub fn classify(a: &ClassifyArgs) -> Result<Report, CliError> {
    let params = params_of(&a.problem)?;
    let sb = search_box(a.search.l_max, a.search.p_max, a.search.s_max);
    let lambda = Complex64::new(a.lambda.0, a.lambda.1);
    let v = uniqueness_verdict_in(&params, lambda, sb)?;
    let witness: Cell = match v.witness {
        Some(Witness::Problem1(i)) => format!("{},{},{}", i.l, i.p, i.s).into(),
        Some(Witness::ProblemA(i)) => format!("{},{},{}", i.l, i.s_y, i.s_t).into(),
        None => Cell::Null,
    };
    let mut rec: Record = vec![
        ("status".into(), v.status.as_str().into()),
        ("theorem".into(), format!("{:?}", v.theorem).into()),
        ("theorem_region".into(), v.theorem_region.into()),
        ("witness".into(), witness),
    ];
    if let Some(c) = v.checks {
        rec.extend([
            ("checks.pde_residual".into(), c.pde_residual.into()),
            ("checks.boundary".into(), c.boundary.into()),
            ("checks.nonlocal".into(), c.nonlocal.into()),
            ("checks.passed".into(), c.passed.into()),
        ]);
    }
    let mut config = a.problem.config();
    config.push(("lambda".into(), complex_cell(a.lambda)));
    config.extend(box_config(&sb));
    config.push(("match_tolerance".into(), LAMBDA_MATCH_TOLERANCE.into()));
    Ok(Report {
        kind: "uniqueness verdict",
        config,
        body: Body::Record(rec),
    })
}

pub fn scan(a: &ScanArgs) -> Result<Report, CliError> {
    let mode = match a.mode.0.as_slice() {
        [l, p, s] => ModeIndex::new(*l, *p, shift(*s)?),
        _ => return Err(invalid("--mode needs l,p,s")),
    };
    let sb = search_box(a.search.l_max, a.search.p_max, a.search.s_max);
    let lattice = AlphaLattice {
        r_max: a.r_max,
        points: a.points,
    };
    let rows = degpar::classify::scan_alpha_plane(a.n, a.m, a.k, lattice, sb, mode)?
        .into_iter()
        .map(|r| {
            vec![
                r.alpha_re.into(),
                r.alpha_im.into(),
                r.lambda_re.into(),
                r.lambda_im.into(),
                r.l.into(),
                r.p.into(),
                r.s.into(),
                r.verdict.as_str().into(),
                r.theorem_region.into(),
            ]
        })
        .collect();
    let mut config: Record = vec![
        ("n".into(), a.n.into()),
        ("m".into(), a.m.into()),
        ("k".into(), a.k.into()),
        ("r_max".into(), a.r_max.into()),
        ("points".into(), a.points.into()),
        (
            "mode".into(),
            format!("{},{},{}", mode.l, mode.p, mode.s).into(),
        ),
    ];
    config.extend(box_config(&sb));
    Ok(Report {
        kind: "alpha-plane scan",
        config,
        body: Body::Table {
            columns: vec![
                "alpha_re",
                "alpha_im",
                "lambda_re",
                "lambda_im",
                "l",
                "p",
                "s",
                "verdict",
                "theorem_region",
            ],
            rows,
        },
    })
}

pub fn adjudicate(a: &AdjudicateArgs) -> Result<Report, CliError> {
    let beta = coefficient("beta", Some(a.beta))?;
    let gamma = coefficient("gamma", Some(a.gamma))?;
    let params = ProblemParams::problem_a(a.n, a.m, a.k, beta, gamma)?;
    if a.l == 0 {
        return Err(invalid("--l starts at 1"));
    }
    if a.thetas.is_empty() {
        return Err(invalid("--thetas needs at least one value"));
    }
    let index = ModeIndexA {
        l: a.l,
        s_y: a.s_y.unwrap_or(a.s),
        s_t: a.s_t.unwrap_or(a.s),
    };
    let grid = GridSpec::cube(a.grid, a.offset);
    let adj = adjudicate_split_a(&params, index, &a.thetas, &grid)?;
    let mut rec: Record = vec![
        ("mu".into(), adj.mu.into()),
        ("selected_theta".into(), adj.selected.into()),
        ("identifiable".into(), adj.identifiable.into()),
        ("y_defect".into(), adj.y_defect.into()),
        ("t_defect".into(), adj.t_defect.into()),
    ];
    if let Some(theta) = adj.selected {
        let chosen = adj
            .candidates
            .iter()
            .find(|c| c.theta == theta)
            .expect("selected split is a candidate");
        rec.push(("selected_lambda_re".into(), chosen.lambda.re.into()));
        rec.push(("selected_lambda_im".into(), chosen.lambda.im.into()));
    }
    let mut push = |prefix: String, c: &degpar::verify::SplitCandidate| {
        rec.extend([
            (format!("{prefix}.theta"), c.theta.into()),
            (format!("{prefix}.lambda_11"), c.split.lambda_11.into()),
            (format!("{prefix}.lambda_12"), c.split.lambda_12.into()),
            (format!("{prefix}.lambda_21"), c.split.lambda_21.into()),
            (format!("{prefix}.lambda_22"), c.split.lambda_22.into()),
            (format!("{prefix}.lambda_re"), c.lambda.re.into()),
            (format!("{prefix}.lambda_im"), c.lambda.im.into()),
            (format!("{prefix}.residual_sup"), c.residual.sup_norm.into()),
            (format!("{prefix}.residual_l2"), c.residual.l2_norm.into()),
            (
                format!("{prefix}.pass"),
                (c.residual.sup_norm < adj.tolerance).into(),
            ),
        ]);
    };
    for (i, c) in adj.candidates.iter().enumerate() {
        push(format!("candidates.{i}"), c);
    }
    push("literal".into(), &adj.literal);

    let thetas: Vec<String> = a.thetas.iter().map(|t| t.to_string()).collect();
    let config: Record = vec![
        ("n".into(), a.n.into()),
        ("m".into(), a.m.into()),
        ("k".into(), a.k.into()),
        ("beta".into(), complex_cell(a.beta)),
        ("gamma".into(), complex_cell(a.gamma)),
        ("l".into(), index.l.into()),
        ("s_y".into(), index.s_y.into()),
        ("s_t".into(), index.s_t.into()),
        ("thetas".into(), thetas.join(",").into()),
        ("grid".into(), a.grid.into()),
        ("offset".into(), a.offset.into()),
        ("tolerance".into(), adj.tolerance.into()),
    ];
    Ok(Report {
        kind: "split adjudication",
        config,
        body: Body::Record(rec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_with_two() {
        let e: CliError = SpectrumError::Shooting {
            requested: 3,
            found: 1,
            horizon: 10.0,
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = BesselError::Refinement {
            nu: 0.5,
            root: 3.0,
            residual: 1e-9,
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = SolutionError::InvalidSplit(2.0).into();
        assert_eq!(e.exit_code(), 1);
        let e: CliError = TemporalError::ZeroCoefficient.into();
        assert_eq!(e.exit_code(), 1);
    }
}
