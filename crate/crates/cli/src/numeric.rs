//! `verify-numeric`: residuals of sampled or finite-difference solutions.

use ksym_core::expr::{Assignment, Symbol};
use ksym_core::lagrangian::hessian;
use ksym_core::numverify::{
    divergence_residual, el_residual, hessian_weighted_residual, integral_section_residual, sample_analytic, solve_fd, DiscreteSection,
    DivergenceMethod, FdData, Grid, NumError, Prolongation, ResidualReport,
};

use crate::commands::{usage, CliError};
use crate::problem::{parse_extents, per_direction, Problem, Solution};
use crate::report::{Grade, Report};

/// Minimum residual reduction when the step halves, for second-order schemes.
pub const CONVERGENCE_RATIO: f64 = 3.5;
pub const SOR_TOLERANCE: f64 = 1e-8;
pub const SOR_MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct NumericOptions<'a> {
    pub solution: Option<&'a str>,
    pub currents: &'a [String],
    pub sopde: Option<&'a str>,
    pub grid: Option<&'a str>,
    pub prolongation: Prolongation,
    pub method: DivergenceMethod,
    pub tol: f64,
    pub fd: bool,
}

/// Extents and steps, one per direction.
pub type GridSpec = (Vec<(f64, f64)>, Vec<f64>);

/// Parses `h=<float>,extent=<a:b>[,...]`; `h` and `extent` may each be
/// given once for all directions or once per direction.
pub fn parse_grid_flag(text: &str, k: usize) -> Result<GridSpec, CliError> {
    let mut hs = Vec::new();
    let mut extents = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item.split_once('=').ok_or_else(|| usage(format!("bad --grid item `{item}`, expected key=value")))?;
        match key.trim() {
            "h" => hs.push(value.trim().parse::<f64>().map_err(|_| usage(format!("bad step `{value}`")))?),
            "extent" => extents.extend(parse_extents(value, 0).map_err(|e| usage(e.message))?),
            other => return Err(usage(format!("unknown --grid key `{other}`"))),
        }
    }
    if hs.is_empty() {
        return Err(usage("--grid needs h=<step>"));
    }
    let hs = per_direction(hs, k, "h").map_err(|e| usage(e.message))?;
    let extents = if extents.is_empty() { Vec::new() } else { per_direction(extents, k, "extent").map_err(|e| usage(e.message))? };
    Ok((extents, hs))
}

/// A grid whose steps divide the extents exactly.
pub fn build_grid(extents: &[(f64, f64)], hs: &[f64]) -> Result<Grid, CliError> {
    let mut counts = Vec::with_capacity(hs.len());
    for (&(a, b), &h) in extents.iter().zip(hs) {
        if h.is_nan() || h <= 0.0 || a.is_nan() || b.is_nan() || b <= a {
            return Err(usage(format!("invalid grid direction [{a}, {b}] with h = {h}")));
        }
        let m = (b - a) / h;
        if (m - m.round()).abs() > 1e-9 * m.max(1.0) {
            return Err(usage(format!("step {h} does not divide [{a}, {b}]")));
        }
        counts.push(m.round() as usize + 1);
    }
    Grid::new(extents, &counts).map_err(|e| usage(e.to_string()))
}

fn num_error(e: NumError) -> CliError {
    usage(e.to_string())
}

struct Study<'a> {
    p: &'a Problem,
    sol: &'a Solution,
    params: &'a Assignment,
    extents: Vec<(f64, f64)>,
    hs: Vec<f64>,
    tol: f64,
}

impl Study<'_> {
    fn grid(&self, refine: bool) -> Result<Grid, CliError> {
        let hs: Vec<f64> = self.hs.iter().map(|h| if refine { h / 2.0 } else { *h }).collect();
        build_grid(&self.extents, &hs)
    }

    fn section(&self, grid: &Grid, prolongation: Prolongation) -> Result<DiscreteSection, CliError> {
        sample_analytic(self.p.chart(), &self.sol.phi, grid, self.params, prolongation).map_err(num_error)
    }

    /// Records `name` measured on the grid and, for truncated schemes, on the
    /// refined grid. Passes below the tolerance or at second-order convergence.
    fn measure(
        &self,
        r: &mut Report,
        name: &str,
        truncated: bool,
        f: &dyn Fn(&DiscreteSection) -> Result<ResidualReport, NumError>,
        prolongation: Prolongation,
    ) -> Result<(), CliError> {
        let coarse = f(&self.section(&self.grid(false)?, prolongation)?).map_err(num_error)?;
        r.measure(format!("{name}.max_abs"), coarse.max_abs);
        r.measure(format!("{name}.l2_mean"), coarse.l2_mean);
        r.measure(format!("{name}.nodes"), coarse.nodes as f64);
        let small = coarse.max_abs < self.tol;
        if !truncated {
            r.verdict(name, small, Grade::Numeric, Some(format!("(max {:e} vs tolerance {:e})", coarse.max_abs, self.tol)));
            return Ok(());
        }
        let fine = f(&self.section(&self.grid(true)?, prolongation)?).map_err(num_error)?;
        let ratio = coarse.max_abs / fine.max_abs;
        r.measure(format!("{name}.refined.max_abs"), fine.max_abs);
        r.measure(format!("{name}.ratio"), ratio);
        let pass = small || ratio >= CONVERGENCE_RATIO;
        r.verdict(
            name,
            pass,
            Grade::Numeric,
            Some(format!("(max {:e}, ratio {ratio:.3} under halving; needs < {:e} or ratio >= {CONVERGENCE_RATIO})", coarse.max_abs, self.tol)),
        );
        Ok(())
    }
}

fn fd_study(r: &mut Report, study: &Study) -> Result<(), CliError> {
    let p = study.p;
    let l = &p.lagrangian;
    let (k, n) = (p.chart().k(), p.chart().n());
    let h = hessian(l);
    let mut signs = Vec::new();
    for alpha in 0..k {
        let c = h.get(alpha, 0, alpha, 0).eval(study.params).map_err(|e| usage(format!("--fd: {e}")))?;
        signs.push(c.signum());
    }
    let phi = study.sol.phi.clone();
    let data = if signs.iter().all(|s| *s == signs[0]) {
        FdData::Elliptic { boundary: phi.clone(), tolerance: SOR_TOLERANCE, max_iterations: SOR_MAX_ITERATIONS }
    } else {
        let velocity = phi.iter().map(|e| e.diff(&Symbol::Time(0))).collect();
        FdData::Hyperbolic { initial: phi.clone(), velocity, boundary: phi.clone() }
    };
    r.input("fd.scheme", if matches!(data, FdData::Elliptic { .. }) { "successive over-relaxation" } else { "leapfrog" });
    let mut errors = Vec::new();
    for refine in [false, true] {
        let grid = study.grid(refine)?;
        let sol = match solve_fd(l, &grid, study.params, &data) {
            Ok(s) => s,
            Err(e @ (NumError::CflViolation { .. } | NumError::NonConvergence { .. })) => {
                r.verdict("fd_solve", false, Grade::Numeric, Some(format!("({e})")));
                return Ok(());
            }
            Err(e) => return Err(num_error(e)),
        };
        let exact = study.section(&grid, Prolongation::Exact)?;
        let err = (0..grid.len() * n).map(|m| (sol.section.values[m] - exact.values[m]).abs()).fold(0.0, f64::max);
        let tag = if refine { "fd.refined" } else { "fd" };
        r.measure(format!("{tag}.error"), err);
        r.measure(format!("{tag}.el.max_abs"), sol.el.max_abs);
        r.measure(format!("{tag}.iterations"), sol.iterations as f64);
        errors.push(err);
    }
    let ratio = errors[0] / errors[1];
    r.measure("fd.ratio", ratio);
    let pass = errors[0] < study.tol || ratio >= CONVERGENCE_RATIO;
    r.verdict(
        "fd_convergence",
        pass,
        Grade::Numeric,
        Some(format!("(error {:e}, ratio {ratio:.3} under halving; needs < {:e} or ratio >= {CONVERGENCE_RATIO})", errors[0], study.tol)),
    );
    Ok(())
}

pub fn verify_numeric(p: &Problem, opts: &NumericOptions) -> Result<Report, CliError> {
    let name = match opts.solution {
        Some(s) => s,
        None => p.sole_solution()?,
    };
    let sol = p.solution(name)?;
    let k = p.chart().k();
    let (mut extents, mut hs) = (sol.extents.clone(), sol.h.clone());
    if let Some(g) = opts.grid {
        let (e, h) = parse_grid_flag(g, k)?;
        if !e.is_empty() {
            extents = e;
        }
        hs = h;
    }
    let missing: Vec<_> = p.chart().params().iter().filter(|q| sol.params.get(&Symbol::param(q)).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(usage(format!("no numeric value for parameter(s) {}", missing.join(", "))));
    }
    let mut r = Report::new("verify-numeric");
    r.input("problem", &p.name);
    r.input("solution", name);
    for (i, e) in sol.phi.iter().enumerate() {
        r.object(format!("phi{}", i + 1), e);
    }
    let extent_text: Vec<_> = extents.iter().map(|(a, b)| format!("{a}:{b}")).collect();
    r.input("extent", extent_text.join(","));
    r.input("h", hs.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    let prolongation = opts.prolongation;
    r.input("prolongation", if prolongation == Prolongation::Exact { "exact" } else { "finite-difference" });
    r.input("tolerance", format!("{:e}", opts.tol));
    let study = Study { p, sol, params: &sol.params, extents, hs, tol: opts.tol };
    let fd_prolong = prolongation == Prolongation::FiniteDifference;
    let l = &p.lagrangian;
    let params = &sol.params;

    study.measure(&mut r, "el", fd_prolong, &|s| el_residual(s, l, params), prolongation)?;
    if !opts.currents.is_empty() {
        let probe = study.section(&study.grid(false)?, prolongation)?;
        let method = opts.method.resolve(&probe);
        r.input("divergence", method.label());
        let truncated = fd_prolong || method == DivergenceMethod::CenteredDifference;
        for c in opts.currents {
            let f = p.current(c)?;
            let chart = p.chart();
            study.measure(&mut r, &format!("divergence[{c}]"), truncated, &|s| divergence_residual(f, chart, s, params, method), prolongation)?;
        }
    }
    if let Some(s) = opts.sopde {
        r.input("sopde", s);
        let xi = p.sopde(s)?;
        study.measure(&mut r, &format!("integral_section[{s}]"), fd_prolong, &|sec| integral_section_residual(xi, sec, params), prolongation)?;
        study.measure(&mut r, &format!("hessian_weighted[{s}]"), fd_prolong, &|sec| hessian_weighted_residual(xi, l, sec, params), prolongation)?;
    }
    if opts.fd {
        fd_study(&mut r, &study)?;
    }
    Ok(r)
}
