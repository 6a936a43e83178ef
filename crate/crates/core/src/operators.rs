//! Mean-value averaging operators and the remainder functional.
//!
//! Each operator takes the infimum of an average of `u` over det-one
//! ellipsoids at `x`: solid or boundary averages, with the competing shapes
//! either capped by an eigenvalue bound `phi(eps)` or constrained to keep the
//! ellipsoid inside a domain. The discrete operator replaces the average by
//! symmetric differences along an orthonormal frame. Subtracting
//! `u(x) + c f(x)^(1/n) eps^2` leaves the remainder whose decay rate the
//! rate studies measure.

use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::geometry::ConvexDomain;
use crate::linalg::{self, SpdShape, SymMatrix};
use crate::quadrature::{AverageKind, QuadratureRule};
use crate::report::{self, RateFit};
use crate::search::{self, SearchBudget, SearchOptions};
use serde::{Deserialize, Serialize};

/// Operator flavor; fixes both the averaging geometry and the expansion
/// coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SolidRestricted,
    SolidDomain,
    SurfaceRestricted,
    SurfaceDomain,
    WeightedSurface,
    Discrete,
}

impl Variant {
    /// Coefficient `c` of the `f(x)^(1/n) eps^2` term. Solid averages carry
    /// `n / (2(n+2))`; surface, weighted-surface, and discrete averages carry
    /// `1/2`.
    pub fn coefficient(self, dim: usize) -> f64 {
        match self {
            Variant::SolidRestricted | Variant::SolidDomain => {
                dim as f64 / (2.0 * (dim as f64 + 2.0))
            }
            _ => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::SolidRestricted => "solid_restricted",
            Variant::SolidDomain => "solid_domain",
            Variant::SurfaceRestricted => "surface_restricted",
            Variant::SurfaceDomain => "surface_domain",
            Variant::WeightedSurface => "weighted_surface",
            Variant::Discrete => "discrete",
        }
    }
}

/// Eigenvalue-bound schedule `eps -> phi(eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiSpec {
    /// `phi(eps) = eps^(-alpha)` with `0 < alpha < 1`.
    Power { alpha: f64 },
    /// Piecewise table `(eps, phi)`, matched exactly.
    Table(Vec<(f64, f64)>),
    /// Fixed bound, used only as a stand-in for the unrestricted infimum in
    /// diagnostics; the true unrestricted infimum can diverge and must not be
    /// presented as a converged number.
    Constant(f64),
}

impl PhiSpec {
    pub fn eval(&self, eps: f64) -> Result<f64> {
        match self {
            PhiSpec::Power { alpha } => {
                if !(0.0 < *alpha && *alpha < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "power schedule exponent {alpha} outside (0, 1)"
                    )));
                }
                Ok(eps.powf(-alpha))
            }
            PhiSpec::Table(rows) => rows
                .iter()
                .find(|(e, _)| (*e - eps).abs() <= 1e-12 * eps.abs())
                .map(|(_, p)| *p)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("phi table has no entry for eps {eps}"))
                }),
            PhiSpec::Constant(c) => Ok(*c),
        }
    }

    /// Numeric check of the scaling hypotheses on the tested schedule:
    /// `phi` increases as `eps` decreases and `eps phi(eps)` decreases.
    /// Constant schedules are diagnostic-only and rejected here.
    pub fn validate_on(&self, schedule: &[f64]) -> Result<()> {
        if matches!(self, PhiSpec::Constant(_)) {
            return Err(Error::InvalidConfig(
                "constant bound does not satisfy the scaling hypotheses".into(),
            ));
        }
        for w in schedule.windows(2) {
            let (e_big, e_small) = (w[0], w[1]);
            let p_big = self.eval(e_big)?;
            let p_small = self.eval(e_small)?;
            if !(p_small > p_big) {
                return Err(Error::InvalidConfig(format!(
                    "phi must increase as eps decreases ({e_small} -> {p_small} vs {e_big} -> {p_big})"
                )));
            }
            if !(e_small * p_small < e_big * p_big) {
                return Err(Error::InvalidConfig(
                    "eps * phi(eps) must decrease along the schedule".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Quadrature orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    pub radial_order: usize,
    pub angular_order: usize,
    pub kink_angular_order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            radial_order: 8,
            angular_order: 32,
            kink_angular_order: 256,
        }
    }
}

/// Discrete-stencil resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StencilSpec {
    /// Frame angles in `[0, pi)` (plane).
    pub rotations: usize,
    /// Points per log-alpha axis.
    pub alpha_grid: usize,
}

impl Default for StencilSpec {
    fn default() -> Self {
        StencilSpec {
            rotations: 32,
            alpha_grid: 33,
        }
    }
}

/// Operator configuration: variant, bound schedule, and resolution budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MvConfig {
    pub variant: Variant,
    pub phi: PhiSpec,
    pub quad: QuadConfig,
    pub search: SearchBudget,
    pub stencil: StencilSpec,
}

impl Default for MvConfig {
    fn default() -> Self {
        MvConfig {
            variant: Variant::SolidRestricted,
            phi: PhiSpec::Power { alpha: 0.5 },
            quad: QuadConfig::default(),
            search: SearchBudget::default(),
            stencil: StencilSpec::default(),
        }
    }
}

impl MvConfig {
    pub fn rule(&self, dim: usize) -> Result<QuadratureRule> {
        Ok(QuadratureRule::new(dim, self.quad.radial_order, self.quad.angular_order)?
            .with_kink_order(self.quad.kink_angular_order))
    }

    /// Relative quadrature error budget for the given integrand.
    pub fn error_budget(u: &TestFunction) -> f64 {
        if u.smoothness == crate::functions::Smoothness::C2 {
            1e-8
        } else {
            1e-5
        }
    }
}

/// Operator value with search diagnostics.
#[derive(Debug, Clone)]
pub struct MvResult {
    pub value: f64,
    /// Largest eigenvalue of the minimizing shape (square root of the largest
    /// stencil weight for the discrete operator).
    pub lambda_max: f64,
    pub evals: usize,
}

fn hint_matrix(u: &TestFunction, x: &[f64]) -> Option<SymMatrix> {
    let h = u.hess(x)?;
    SpdShape::new(h.clone()).ok().map(|_| h)
}

fn locality_guard(u: &TestFunction, x: &[f64], eps: f64, phi: f64) -> Result<()> {
    let reach = eps * phi;
    if u.domain.boundary_distance(x) <= reach {
        return Err(Error::EllipsoidEscapesDomain);
    }
    Ok(())
}

/// Average of `u` over the ellipsoid of `shape` at `x`, enforcing containment
/// in the function's domain when requested.
pub fn ellipsoid_average(
    u: &TestFunction,
    x: &[f64],
    shape: &SpdShape,
    eps: f64,
    kind: AverageKind,
    cfg: &MvConfig,
    enforce_domain: bool,
) -> Result<f64> {
    if enforce_domain && !matches!(u.domain, ConvexDomain::WholeSpace) {
        let e = crate::geometry::Ellipsoid::new(x.to_vec(), shape.clone(), eps)?;
        if !u.domain.contains_ellipsoid(&e) {
            return Err(Error::EllipsoidEscapesDomain);
        }
    }
    let rule = cfg.rule(u.dim)?;
    let eval = |p: &[f64]| u.eval(p);
    rule.ellipsoid_average(&eval, x, shape, eps, kind, &u.kinks)
}

/// Diagnostic fixed-shape value with the feasibility filter disabled.
pub fn fixed_shape_value(
    u: &TestFunction,
    x: &[f64],
    shape: &SpdShape,
    eps: f64,
    kind: AverageKind,
    cfg: &MvConfig,
) -> Result<f64> {
    ellipsoid_average(u, x, shape, eps, kind, cfg, false)
}

fn searched_average(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    kind: AverageKind,
    weighted: bool,
    domain: Option<&ConvexDomain>,
) -> Result<MvResult> {
    let rule = cfg.rule(u.dim)?;
    let objective = move |shape: &SpdShape| -> Result<f64> {
        let eval = |p: &[f64]| u.eval(p);
        if weighted {
            rule.weighted_surface_average(&eval, x, shape, eps, &u.kinks)
        } else {
            rule.ellipsoid_average(&eval, x, shape, eps, kind, &u.kinks)
        }
    };
    let hint = hint_matrix(u, x);
    let options = SearchOptions {
        hessian_hint: hint.as_ref(),
        extra_candidates: &[],
    };
    let result = match domain {
        None => {
            let phi = cfg.phi.eval(eps)?;
            locality_guard(u, x, eps, phi)?;
            search::inf_restricted(&objective, u.dim, phi, &cfg.search, options)?
        }
        Some(dom) => {
            // the shape must keep the ellipsoid inside the constraint domain
            // and, when u is only defined on a bounded set, inside that too
            if matches!(u.domain, ConvexDomain::WholeSpace) {
                search::inf_domain(&objective, u.dim, dom, x, eps, &cfg.search, options)?
            } else {
                let own_cap = u.domain.max_scale(x, &SpdShape::identity(u.dim))?;
                if eps >= own_cap {
                    return Err(Error::EllipsoidEscapesDomain);
                }
                let own = u.domain.clone();
                let xv = x.to_vec();
                let guarded = move |shape: &SpdShape| -> Result<f64> {
                    match own.max_scale(&xv, shape) {
                        Ok(cap) if eps <= cap * (1.0 + 1e-9) => objective(shape),
                        _ => Ok(f64::INFINITY),
                    }
                };
                search::inf_domain(&guarded, u.dim, dom, x, eps, &cfg.search, options)?
            }
        }
    };
    Ok(MvResult {
        value: result.value,
        lambda_max: result.lambda_max,
        evals: result.evals,
    })
}

/// Solid average under the eigenvalue cap `phi(eps)`.
pub fn mv_solid_restricted(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
) -> Result<MvResult> {
    searched_average(u, x, eps, cfg, AverageKind::Solid, false, None)
}

/// Solid average over ellipsoids contained in `domain`.
pub fn mv_solid_domain(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    domain: &ConvexDomain,
) -> Result<MvResult> {
    searched_average(u, x, eps, cfg, AverageKind::Solid, false, Some(domain))
}

/// Boundary average; restricted when `domain` is absent, domain-constrained
/// otherwise.
pub fn mv_surface(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    domain: Option<&ConvexDomain>,
) -> Result<MvResult> {
    searched_average(u, x, eps, cfg, AverageKind::Surface, false, domain)
}

/// Weighted boundary average (the coarea weight makes its sphere pullback
/// uniform); restricted or domain-constrained like `mv_surface`.
pub fn mv_weighted_surface(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    domain: Option<&ConvexDomain>,
) -> Result<MvResult> {
    searched_average(u, x, eps, cfg, AverageKind::Surface, true, domain)
}

/// Whether a stencil weight vector lies in the admissible set: positive
/// entries, product one, every entry below `phi^2`.
pub fn alpha_feasible(alpha: &[f64], phi: f64) -> bool {
    let cap = phi * phi;
    let product: f64 = alpha.iter().product();
    alpha.iter().all(|&a| 0.0 < a && a < cap) && (product - 1.0).abs() <= 1e-9
}

/// Discrete operator: minimum over orthonormal frames and admissible weights
/// of `(1/n) sum_i (u(x + eps sqrt(a_i) v_i) + u(x - eps sqrt(a_i) v_i)) / 2`.
pub fn mv_discrete(u: &TestFunction, x: &[f64], eps: f64, cfg: &MvConfig) -> Result<MvResult> {
    let n = u.dim;
    let phi = cfg.phi.eval(eps)?;
    if phi < 1.0 {
        return Err(Error::InfeasibleBound { bound: phi });
    }
    let cap_log = 2.0 * phi.ln() * (1.0 - 1e-9);

    let stencil_value = |frame: &crate::linalg::Matrix, alpha: &[f64]| -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..n {
            let v = frame.column(i);
            let arm = linalg::scale(&v, eps * alpha[i].sqrt());
            for sign in [1.0, -1.0] {
                let p = linalg::add(x, &linalg::scale(&arm, sign));
                if !u.domain.contains_point(&p) {
                    return Err(Error::StencilOutOfDomain { point: p });
                }
                acc += 0.5 * u.eval(&p);
            }
        }
        Ok(acc / n as f64)
    };

    let mut best: Option<(f64, f64)> = None; // (value, sqrt(alpha_max))
    let mut evals = 0usize;
    let consider = |value: f64, alpha: &[f64], best: &mut Option<(f64, f64)>| {
        let width = alpha.iter().fold(0.0f64, |m, &a| m.max(a)).sqrt();
        if best.is_none_or(|(bv, _)| value < bv) {
            *best = Some((value, width));
        }
    };

    // frame/alpha grid
    let grid: Vec<f64> = if cfg.stencil.alpha_grid <= 1 || cap_log == 0.0 {
        vec![0.0]
    } else {
        (0..cfg.stencil.alpha_grid)
            .map(|j| -cap_log + 2.0 * cap_log * j as f64 / (cfg.stencil.alpha_grid - 1) as f64)
            .collect()
    };
    if n == 2 {
        for k in 0..cfg.stencil.rotations.max(1) {
            let theta =
                std::f64::consts::PI * k as f64 / cfg.stencil.rotations.max(1) as f64;
            let frame = crate::linalg::Matrix::rotation2(theta);
            for &t in &grid {
                let alpha = [t.exp(), (-t).exp()];
                evals += 1;
                let v = stencil_value(&frame, &alpha)?;
                consider(v, &alpha, &mut best);
            }
        }
    } else {
        for frame in search::sphere_frames() {
            for &t1 in &grid {
                for &t2 in &grid {
                    if (t1 + t2).abs() > cap_log {
                        continue;
                    }
                    let alpha = [t1.exp(), t2.exp(), (-(t1 + t2)).exp()];
                    evals += 1;
                    let v = stencil_value(&frame, &alpha)?;
                    consider(v, &alpha, &mut best);
                }
            }
        }
    }

    // Hessian-hint candidate: eigenframe of D^2 u(x) and weights proportional
    // to det^(1/n) / lambda_i, clamped into the admissible box and
    // renormalized to product one
    if let Some(h) = hint_matrix(u, x) {
        let spd = SpdShape::new(h).expect("hint is SPD");
        let root = spd.det_root();
        let mut alpha: Vec<f64> = spd.eigenvalues().iter().map(|l| root / l).collect();
        let lo = (-cap_log).exp();
        let hi = cap_log.exp();
        for _ in 0..8 {
            for a in alpha.iter_mut() {
                *a = a.clamp(lo, hi);
            }
            let mean: f64 =
                (alpha.iter().map(|a| a.ln()).sum::<f64>() / n as f64).exp();
            for a in alpha.iter_mut() {
                *a /= mean;
            }
        }
        if alpha_feasible(&alpha, phi) {
            evals += 1;
            let v = stencil_value(spd.frame(), &alpha)?;
            consider(v, &alpha, &mut best);
        }
    }

    let (value, width) = best.expect("stencil grid is nonempty");
    Ok(MvResult {
        value,
        lambda_max: width,
        evals,
    })
}

/// Dispatch on the configured variant.
pub fn mv(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    domain: Option<&ConvexDomain>,
) -> Result<MvResult> {
    match cfg.variant {
        Variant::SolidRestricted => mv_solid_restricted(u, x, eps, cfg),
        Variant::SolidDomain => {
            let dom = domain.ok_or_else(|| {
                Error::InvalidConfig("solid_domain needs a constraint domain".into())
            })?;
            mv_solid_domain(u, x, eps, cfg, dom)
        }
        Variant::SurfaceRestricted => mv_surface(u, x, eps, cfg, None),
        Variant::SurfaceDomain => {
            let dom = domain.ok_or_else(|| {
                Error::InvalidConfig("surface_domain needs a constraint domain".into())
            })?;
            mv_surface(u, x, eps, cfg, Some(dom))
        }
        Variant::WeightedSurface => mv_weighted_surface(u, x, eps, cfg, domain),
        Variant::Discrete => mv_discrete(u, x, eps, cfg),
    }
}

/// `R(eps) = value - u(x) - c f(x)^(1/n) eps^2` with the variant's
/// coefficient.
pub fn remainder(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    domain: Option<&ConvexDomain>,
) -> Result<f64> {
    let value = mv(u, x, eps, cfg, domain)?.value;
    Ok(remainder_from_value(u, x, eps, cfg, value))
}

fn remainder_from_value(
    u: &TestFunction,
    x: &[f64],
    eps: f64,
    cfg: &MvConfig,
    value: f64,
) -> f64 {
    let c = cfg.variant.coefficient(u.dim);
    let f = u.rhs(x).max(0.0);
    value - u.eval(x) - c * f.powf(1.0 / u.dim as f64) * eps * eps
}

/// One `(eps, value, remainder)` row with search diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub eps: f64,
    pub value: f64,
    pub remainder: f64,
    pub lambda_max: f64,
    pub evals: usize,
}

/// Remainders along a decreasing schedule plus the fitted decay rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderSeries {
    pub entries: Vec<SeriesEntry>,
    pub coefficient: f64,
    /// Absolute floor below which a remainder is quadrature noise.
    pub floor: f64,
    pub fit: RateFit,
    /// Every remainder sits below the floor; the expansion is exact to
    /// within the error budget.
    pub exact: bool,
}

impl RemainderSeries {
    pub fn slope(&self) -> Option<f64> {
        self.fit.slope
    }

    /// Empirical form of the `o(eps^2)` claim: either the fitted decay beats 2
    /// by the margin, or every `|R| / eps^2` is below the noise floor.
    pub fn passes_order_two(&self) -> bool {
        const MARGIN: f64 = 0.1;
        if self
            .entries
            .iter()
            .all(|e| e.remainder.abs() / (e.eps * e.eps) <= self.floor)
        {
            return true;
        }
        self.fit.slope.map_or(self.exact, |s| s > 2.0 + MARGIN)
    }

    pub fn rows(&self) -> Vec<report::SeriesRow> {
        self.entries
            .iter()
            .map(|e| report::SeriesRow {
                eps: e.eps,
                value: e.value,
                remainder: e.remainder,
            })
            .collect()
    }

    /// Full operator records for the record-oriented CSV/JSON outputs.
    pub fn records(&self, variant: Variant, function: &str, x: &[f64]) -> Vec<report::MvRecord> {
        self.entries
            .iter()
            .map(|e| report::MvRecord {
                variant: variant.name().into(),
                function: function.into(),
                x: x.to_vec(),
                eps: e.eps,
                value: e.value,
                remainder: e.remainder,
                lambda_max: e.lambda_max,
                evals: e.evals,
            })
            .collect()
    }
}

/// Remainder series over a strictly decreasing schedule.
pub fn remainder_series(
    u: &TestFunction,
    x: &[f64],
    cfg: &MvConfig,
    schedule: &[f64],
    domain: Option<&ConvexDomain>,
) -> Result<RemainderSeries> {
    if schedule.len() < 2 {
        return Err(Error::InvalidConfig("schedule needs at least two scales".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("schedule must be strictly decreasing".into()));
    }
    if !matches!(cfg.phi, PhiSpec::Constant(_)) {
        cfg.phi.validate_on(schedule)?;
    }
    let mut entries = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let result = mv(u, x, eps, cfg, domain)?;
        entries.push(SeriesEntry {
            eps,
            value: result.value,
            remainder: remainder_from_value(u, x, eps, cfg, result.value),
            lambda_max: result.lambda_max,
            evals: result.evals,
        });
    }
    let floor = 10.0 * MvConfig::error_budget(u);
    let fit = report::fit_rate(
        &entries
            .iter()
            .map(|e| (e.eps, e.remainder))
            .collect::<Vec<_>>(),
        floor,
    );
    let exact = fit.all_below_floor;
    Ok(RemainderSeries {
        entries,
        coefficient: cfg.variant.coefficient(u.dim),
        floor,
        fit,
        exact,
    })
}

/// Default geometric schedule `0.2 * 2^-k`.
pub fn default_schedule(levels: usize) -> Vec<f64> {
    (0..levels).map(|k| 0.2 * 0.5f64.powi(k as i32)).collect()
}

/// Side from which a paraboloid touches the function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
}

/// Outcome of the mean-value inequality test for one touching paraboloid.
#[derive(Debug, Clone)]
pub struct ParaboloidCheck {
    pub name: String,
    pub contact_radius: f64,
    pub entries: Vec<SeriesEntry>,
    /// `(eps, positive part of the inequality violation / eps^2)`.
    pub violations: Vec<(f64, f64)>,
    pub passes: bool,
}

/// Report over a family of touching paraboloids.
#[derive(Debug, Clone)]
pub struct ViscosityReport {
    pub direction: Direction,
    pub checks: Vec<ParaboloidCheck>,
}

impl ViscosityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passes)
    }
}

/// Deterministic low-discrepancy samples of the ball `B_radius(center)`.
fn contact_samples(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let n = center.len();
    (0..count)
        .map(|k| {
            let t = (k as f64 + 0.5) / count as f64;
            match n {
                2 => {
                    let r = radius * t.sqrt();
                    let theta = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
                    vec![center[0] + r * theta.cos(), center[1] + r * theta.sin()]
                }
                _ => {
                    let r = radius * t.cbrt();
                    let z = 1.0 - 2.0 * ((k as f64 * golden).fract());
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let theta = 2.0 * std::f64::consts::PI
                        * ((k as f64 * golden * golden).fract());
                    vec![
                        center[0] + r * rho * theta.cos(),
                        center[1] + r * rho * theta.sin(),
                        center[2] + r * z,
                    ]
                }
            }
        })
        .collect()
}

/// Checks the mean-value inequality of the configured variant for each
/// touching paraboloid. Contact is validated by dense sampling on the stated
/// neighborhood before any operator runs; the inequality side uses the
/// positive part of `P(x) - (value - c f(x)^(1/n) eps^2)` for touching from
/// above (its mirror image from below), normalized by `eps^2`.
pub fn viscosity_check(
    u: &TestFunction,
    x: &[f64],
    cfg: &MvConfig,
    direction: Direction,
    family: &[(TestFunction, f64)],
    schedule: &[f64],
    domain: Option<&ConvexDomain>,
) -> Result<ViscosityReport> {
    let mut checks = Vec::with_capacity(family.len());
    for (p, radius) in family {
        // contact validation
        let contact_gap = (p.eval(x) - u.eval(x)).abs();
        let scale = 1.0 + radius * radius;
        if contact_gap > 1e-9 * scale {
            return Err(Error::NotATouchingParaboloid {
                detail: format!("{}: values differ at the contact point", p.name),
            });
        }
        for sample in contact_samples(x, *radius, 10_000) {
            let gap = p.eval(&sample) - u.eval(&sample);
            let ok = match direction {
                Direction::Above => gap >= -1e-9 * scale,
                Direction::Below => gap <= 1e-9 * scale,
            };
            if !ok {
                return Err(Error::NotATouchingParaboloid {
                    detail: format!(
                        "{}: contact fails at {sample:?} (gap {gap:.3e})",
                        p.name
                    ),
                });
            }
        }

        // the inequality for P carries u's right-hand side at x
        let c = cfg.variant.coefficient(u.dim);
        let f_root = u.rhs(x).max(0.0).powf(1.0 / u.dim as f64);
        let mut entries = Vec::with_capacity(schedule.len());
        let mut violations = Vec::with_capacity(schedule.len());
        for &eps in schedule {
            let result = mv(p, x, eps, cfg, domain)?;
            let value = result.value;
            let r = value - p.eval(x) - c * f_root * eps * eps;
            entries.push(SeriesEntry {
                eps,
                value,
                remainder: r,
                lambda_max: result.lambda_max,
                evals: result.evals,
            });
            let violation = match direction {
                Direction::Above => (-r).max(0.0),
                Direction::Below => r.max(0.0),
            };
            violations.push((eps, violation / (eps * eps)));
        }
        let floor = 10.0 * MvConfig::error_budget(p);
        let passes = violations.iter().all(|(_, v)| *v <= floor) || {
            let fit = report::fit_rate(
                &violations
                    .iter()
                    .map(|(e, v)| (*e, *v * e * e))
                    .collect::<Vec<_>>(),
                floor,
            );
            fit.all_below_floor || fit.slope.is_some_and(|s| s > 2.1)
        };
        checks.push(ParaboloidCheck {
            name: p.name.clone(),
            contact_radius: *radius,
            entries,
            violations,
            passes,
        });
    }
    Ok(ViscosityReport {
        direction,
        checks,
    })
}
