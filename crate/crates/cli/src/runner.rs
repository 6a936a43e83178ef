//! Command implementations: named studies, rate studies, the Dirichlet
//! solver, and bound-schedule sweeps. All artifacts are written with
//! full-precision floats so identical configurations produce byte-identical
//! files.

use crate::config::{CommandKind, FieldSpec, RunConfig};
use mamv_core::error::Error;
use mamv_core::functions::{cone_shell_touching_paraboloid, FunctionSpec, TestFunction};
use mamv_core::geometry::ConvexDomain;
use mamv_core::linalg::{Matrix, SpdShape, SymMatrix};
use mamv_core::operators::{
    self, default_schedule, Direction, MvConfig, RemainderSeries, Variant,
};
use mamv_core::report::{self, SeriesRow};
use mamv_core::solver::{solve_dirichlet, SolveParams};
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            CliError::Validation(d) | CliError::Numerical(d) => d,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::NotConverged { .. }
            | Error::NonFiniteIntegrand { .. }
            | Error::NonFiniteObjective { .. }
            | Error::EigenNoConvergence => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Validation(format!("i/o failure: {e}"))
    }
}

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    config.validate().map_err(CliError::Validation)?;
    let out = config.out_dir();
    std::fs::create_dir_all(&out)?;
    match config.command {
        CommandKind::Rate => run_rate(config, &out),
        CommandKind::Sweep => run_sweep(config, &out),
        CommandKind::Solve => run_solve(config, &out),
        CommandKind::Example => run_example(config, &out),
    }
}

fn build_function(spec: &FunctionSpec, dim: usize) -> Result<TestFunction, CliError> {
    spec.build(dim).map_err(CliError::from)
}

fn artifact_stem(spec: &FunctionSpec, variant: Variant) -> String {
    let mut stem = spec.name.clone();
    if let Some(g) = spec.gamma {
        let _ = write!(stem, "_g{g}");
    }
    let _ = write!(stem, "_{}", variant.name());
    stem
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

fn schedule_of(config: &RunConfig) -> Vec<f64> {
    config.eps.clone().unwrap_or_else(|| default_schedule(4))
}

fn series_json(config: &RunConfig, series: &RemainderSeries) -> serde_json::Value {
    json!({
        "config": config,
        "series": series,
        "slope": series.slope(),
        "exact": series.exact,
        "passes_order_two": series.passes_order_two(),
    })
}

fn run_rate(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let x = config.x.clone().expect("validated");
    let spec = config.function.clone().expect("validated");
    let u = build_function(&spec, x.len())?;
    let cfg = config.mv_config();
    let schedule = schedule_of(config);
    let series =
        operators::remainder_series(&u, &x, &cfg, &schedule, config.domain.as_ref())?;
    let stem = artifact_stem(&spec, cfg.variant);
    write_text(
        &out.join(format!("rate_{stem}.csv")),
        &report::series_csv(&series.rows()),
    )?;
    write_text(
        &out.join(format!("records_{stem}.csv")),
        &report::records_csv(&series.records(cfg.variant, &u.name, &x)),
    )?;
    write_text(
        &out.join(format!("rate_{stem}.json")),
        &serde_json::to_string_pretty(&series_json(config, &series)).expect("serializable"),
    )?;
    match series.slope() {
        Some(s) => println!(
            "rate {stem}: slope {s:.4}, order-two test {}",
            if series.passes_order_two() { "passes" } else { "fails" }
        ),
        None => println!("rate {stem}: remainders below the error floor (exact)"),
    }
    Ok(())
}

fn run_sweep(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let x = config.x.clone().expect("validated");
    let spec = config.function.clone().expect("validated");
    let u = build_function(&spec, x.len())?;
    let schedule = schedule_of(config);
    let mut cfg = config.mv_config();
    let mut csv = String::from("phi,eps,value,remainder,abs_remainder\n");
    let mut summaries = Vec::new();
    for phi in config.phi_list.clone().expect("validated") {
        let label = match &phi {
            mamv_core::operators::PhiSpec::Power { alpha } => format!("power:{alpha}"),
            mamv_core::operators::PhiSpec::Constant(c) => format!("const:{c}"),
            mamv_core::operators::PhiSpec::Table(_) => "table".to_string(),
        };
        cfg.phi = phi;
        let series =
            operators::remainder_series(&u, &x, &cfg, &schedule, config.domain.as_ref())?;
        for e in &series.entries {
            csv.push_str(&format!(
                "{label},{},{},{},{}\n",
                report::format_f64(e.eps),
                report::format_f64(e.value),
                report::format_f64(e.remainder),
                report::format_f64(e.remainder.abs()),
            ));
        }
        println!(
            "sweep {label}: slope {:?}, order-two test {}",
            series.slope(),
            if series.passes_order_two() { "passes" } else { "fails" }
        );
        summaries.push(json!({
            "phi": label,
            "slope": series.slope(),
            "exact": series.exact,
            "passes_order_two": series.passes_order_two(),
            "series": series,
        }));
    }
    let stem = artifact_stem(&spec, cfg.variant);
    write_text(&out.join(format!("sweep_{stem}.csv")), &csv)?;
    write_text(
        &out.join(format!("sweep_{stem}.json")),
        &serde_json::to_string_pretty(&json!({ "config": config, "runs": summaries }))
            .expect("serializable"),
    )?;
    Ok(())
}

type BoxedField = Box<dyn Fn(&[f64]) -> f64 + Sync>;

fn field_closures(field: &FieldSpec, dim: usize, as_rhs: bool) -> Result<BoxedField, CliError> {
    match field {
        FieldSpec::Constant(c) => {
            let c = *c;
            Ok(Box::new(move |_: &[f64]| c))
        }
        FieldSpec::Name(name) => {
            let u = build_function(&FunctionSpec::named(name), dim)?;
            if as_rhs {
                Ok(Box::new(move |p: &[f64]| u.rhs(p)))
            } else {
                Ok(Box::new(move |p: &[f64]| u.eval(p)))
            }
        }
    }
}

fn run_solve(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let solve = config.solve.clone().expect("validated");
    let domain = config.domain.clone().expect("validated");
    // named f supplies its right-hand side; named g supplies boundary values
    let f = field_closures(&solve.f, 2, true)?;
    let g = field_closures(&solve.g, 2, false)?;
    let exact_name = solve.exact.clone().or(match &solve.g {
        FieldSpec::Name(n) => Some(n.clone()),
        FieldSpec::Constant(_) => None,
    });
    let exact = match &exact_name {
        Some(name) => Some(field_closures(&FieldSpec::Name(name.clone()), 2, false)?),
        None => None,
    };
    let params = SolveParams {
        h: solve.h,
        eps: solve.eps,
        tol: solve.tol,
        max_iter: solve.max_iter,
    };
    let cfg = config.mv_config();
    let (grid, solve_report) = solve_dirichlet(
        &domain,
        f.as_ref(),
        g.as_ref(),
        &params,
        &cfg,
        exact.as_ref().map(|e| e.as_ref()),
    )?;
    let mut csv = String::from("x,y,u\n");
    for (x, y, u) in grid.rows() {
        csv.push_str(&format!(
            "{},{},{}\n",
            report::format_f64(x),
            report::format_f64(y),
            report::format_f64(u)
        ));
    }
    write_text(&out.join("solution.csv"), &csv)?;
    write_text(
        &out.join("solve_report.json"),
        &serde_json::to_string_pretty(&json!({
            "config": config,
            "report": solve_report,
        }))
        .expect("serializable"),
    )?;
    match solve_report.max_error {
        Some(err) => println!(
            "solve: {} sweeps, residual {:.3e}, max error {err:.3e} vs {}",
            solve_report.iterations,
            solve_report.residual,
            exact_name.as_deref().unwrap_or("exact")
        ),
        None => println!(
            "solve: {} sweeps, residual {:.3e}",
            solve_report.iterations, solve_report.residual
        ),
    }
    Ok(())
}

// --- named studies ----------------------------------------------------------

fn run_example(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let name = config.name.clone().expect("validated");
    let cfg = config.mv_config();
    match name.as_str() {
        "paraboloid-exactness" => example_paraboloid_exactness(config, &cfg, out),
        "quartic-rate" => example_quartic_rate(config, &cfg, out),
        "quartic-blowup" => example_quartic_blowup(config, &cfg, out),
        "fold-scaling" => example_fold_scaling(config, &cfg, out),
        "fold-domain" => example_fold_domain(config, &cfg, out),
        "cone-shell-pointwise" => example_cone_shell_pointwise(config, &cfg, out),
        "cone-shell-discrete" => example_cone_shell_discrete(config, &cfg, out),
        "cone-shell-viscosity" => example_cone_shell_viscosity(config, &cfg, out),
        other => Err(CliError::Validation(format!(
            "unknown example '{other}'; available: paraboloid-exactness, quartic-rate, \
             quartic-blowup, fold-scaling, fold-domain, cone-shell-pointwise, \
             cone-shell-discrete, cone-shell-viscosity"
        ))),
    }
}

fn finish_example(
    out: &Path,
    name: &str,
    csv: &str,
    verdict: serde_json::Value,
    line: String,
) -> Result<(), CliError> {
    write_text(&out.join(format!("example_{name}.csv")), csv)?;
    write_text(
        &out.join(format!("example_{name}.json")),
        &serde_json::to_string_pretty(&verdict).expect("serializable"),
    )?;
    println!("{line}");
    Ok(())
}

/// Strictly convex paraboloids: the expansion holds without remainder.
fn example_paraboloid_exactness(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let rot = Matrix::rotation2(std::f64::consts::PI / 6.0);
    let rotated = {
        let d = SymMatrix::diag(&[3.0, 1.0 / 3.0]).to_matrix();
        let m = rot.mul(&d).mul(&rot.transpose());
        SymMatrix::from_rows(&[
            vec![m.get(0, 0), 0.5 * (m.get(0, 1) + m.get(1, 0))],
            vec![0.5 * (m.get(0, 1) + m.get(1, 0)), m.get(1, 1)],
        ])
        .map_err(CliError::from)?
    };
    let mut csv = String::new();
    let mut all_exact = true;
    let schedule = schedule_of(config);
    for (label, m) in [
        ("identity", SymMatrix::identity(2)),
        ("diagonal", SymMatrix::diag(&[2.0, 0.5])),
        ("rotated", rotated),
    ] {
        let u = TestFunction::paraboloid(m, vec![0.0, 0.0], 0.0).map_err(CliError::from)?;
        let series = operators::remainder_series(&u, &[0.0, 0.0], cfg, &schedule, None)?;
        all_exact &= series.exact;
        csv.push_str(&format!("# {label}\n"));
        csv.push_str(&report::series_csv(&series.rows()));
    }
    let verdict = json!({ "config": config, "exact": all_exact });
    finish_example(
        out,
        "paraboloid-exactness",
        &csv,
        verdict,
        format!("paraboloid-exactness: exact = {all_exact}"),
    )
}

/// Fourth-order remainder of the positive quartic perturbation.
fn example_quartic_rate(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let u = TestFunction::u_plus(2);
    let x = config.x.clone().unwrap_or(vec![0.0, 0.0]);
    let series = operators::remainder_series(&u, &x, cfg, &schedule_of(config), None)?;
    let slope = series.slope();
    let verdict = series_json(config, &series);
    finish_example(
        out,
        "quartic-rate",
        &report::series_csv(&series.rows()),
        verdict,
        format!("quartic-rate: slope {slope:?}"),
    )
}

/// Restricted decay of the concave quartic, plus the unfiltered blow-up.
fn example_quartic_blowup(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let u = TestFunction::u_minus(2);
    let x = config.x.clone().unwrap_or(vec![0.3, 0.0]);
    let series = operators::remainder_series(&u, &x, cfg, &schedule_of(config), None)?;
    let stretched = SpdShape::from_spectrum(&[1e3, 1e-3], &Matrix::identity(2))
        .map_err(CliError::from)?;
    let diagnostic = operators::fixed_shape_value(
        &u,
        &x,
        &stretched,
        0.5,
        mamv_core::quadrature::AverageKind::Solid,
        cfg,
    )?;
    let mut csv = report::series_csv(&series.rows());
    csv.push_str(&format!(
        "diagnostic_fixed_shape,{}\n",
        report::format_f64(diagnostic)
    ));
    let verdict = json!({
        "config": config,
        "slope": series.slope(),
        "passes_order_two": series.passes_order_two(),
        "diagnostic_value": diagnostic,
        "value_at_x": u.eval(&x),
    });
    finish_example(
        out,
        "quartic-blowup",
        &csv,
        verdict,
        format!(
            "quartic-blowup: restricted slope {:?}, unfiltered diagnostic {diagnostic:.3e}",
            series.slope()
        ),
    )
}

/// Scaling law of the fold against the closed-form constant.
fn example_fold_scaling(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let gamma = config
        .function
        .as_ref()
        .and_then(|f| f.gamma)
        .unwrap_or(1.0);
    let u = TestFunction::ridge(gamma).map_err(CliError::from)?;
    let series =
        operators::remainder_series(&u, &[0.0, 0.0], cfg, &schedule_of(config), None)?;
    let c1 = 4.0 / (3.0 * std::f64::consts::PI);
    let mut csv = String::from("eps,value,closed_form,rel_gap\n");
    if gamma == 1.0 {
        for e in &series.entries {
            let want = c1 * e.eps.powf(1.5);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                report::format_f64(e.eps),
                report::format_f64(e.value),
                report::format_f64(want),
                report::format_f64((e.value - want).abs() / want),
            ));
        }
    } else {
        csv = report::series_csv(&series.rows());
    }
    let verdict = json!({
        "config": config,
        "gamma": gamma,
        "slope": series.slope(),
        "passes_order_two": series.passes_order_two(),
    });
    finish_example(
        out,
        "fold-scaling",
        &csv,
        verdict,
        format!(
            "fold-scaling (gamma {gamma}): slope {:?}, order-two test {}",
            series.slope(),
            if series.passes_order_two() { "passes" } else { "fails" }
        ),
    )
}

/// Containment in the unit disc keeps the fold average at order eps^2.
fn example_fold_domain(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let u = TestFunction::ridge(1.0).map_err(CliError::from)?;
    let disc = config
        .domain
        .clone()
        .unwrap_or(ConvexDomain::disc(vec![0.0, 0.0], 1.0).map_err(CliError::from)?);
    let mut csv = String::from("eps,value,ratio\n");
    let mut ratios = Vec::new();
    for eps in config.eps.clone().unwrap_or(vec![0.1, 0.05]) {
        let r = operators::mv_solid_domain(&u, &[0.0, 0.0], eps, cfg, &disc)?;
        let ratio = r.value / (eps * eps);
        ratios.push(ratio);
        csv.push_str(&format!(
            "{},{},{}\n",
            report::format_f64(eps),
            report::format_f64(r.value),
            report::format_f64(ratio)
        ));
    }
    let verdict = json!({ "config": config, "ratios": ratios });
    finish_example(
        out,
        "fold-domain",
        &csv,
        verdict,
        format!("fold-domain: value/eps^2 ratios {ratios:?}"),
    )
}

/// Normalized remainders at the cone-shell kink decay under both constraints.
fn example_cone_shell_pointwise(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let cone = TestFunction::cone_shell(2);
    let x0 = [1.0, 0.0];
    let schedule = config
        .eps
        .clone()
        .unwrap_or(vec![0.1, 0.05, 0.025, 0.0125]);
    let mut csv = String::new();
    let mut verdicts = Vec::new();
    for (label, domain) in [
        ("restricted", None),
        ("whole_space", Some(ConvexDomain::whole_space())),
    ] {
        let mut rows = Vec::new();
        let mut normalized = Vec::new();
        for &eps in &schedule {
            let r = match &domain {
                None => operators::mv_solid_restricted(&cone, &x0, eps, cfg)?,
                Some(d) => operators::mv_solid_domain(&cone, &x0, eps, cfg, d)?,
            };
            normalized.push(r.value / (eps * eps));
            rows.push(SeriesRow {
                eps,
                value: r.value,
                remainder: r.value,
            });
        }
        let ratios: Vec<f64> = normalized.windows(2).map(|w| w[1] / w[0]).collect();
        csv.push_str(&format!("# {label}\n"));
        csv.push_str(&report::series_csv(&rows));
        verdicts.push(json!({ "constraint": label, "ratios": ratios }));
    }
    let verdict = json!({ "config": config, "runs": verdicts });
    finish_example(
        out,
        "cone-shell-pointwise",
        &csv,
        verdict,
        "cone-shell-pointwise: normalized remainders decay under both constraints".into(),
    )
}

/// Discrete stencil at the cone-shell kink against the hand-derived bound.
fn example_cone_shell_discrete(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let cone = TestFunction::cone_shell(2);
    let eps = config.eps.as_ref().map_or(0.01, |e| e[0]);
    let r = operators::mv_discrete(&cone, &[1.0, 0.0], eps, cfg)?;
    let ratio = r.value / (eps * eps);
    let phi = cfg.phi.eval(eps).map_err(CliError::from)?;
    let admissible = operators::alpha_feasible(&[eps.sqrt(), eps.sqrt().recip()], phi);
    let csv = format!(
        "eps,value,ratio,candidate_admissible\n{},{},{},{admissible}\n",
        report::format_f64(eps),
        report::format_f64(r.value),
        report::format_f64(ratio)
    );
    let verdict = json!({
        "config": config,
        "ratio": ratio,
        "candidate_admissible": admissible,
    });
    finish_example(
        out,
        "cone-shell-discrete",
        &csv,
        verdict,
        format!("cone-shell-discrete: value/eps^2 = {ratio:.4}, candidate admissible = {admissible}"),
    )
}

/// Touching-paraboloid inequality checks at the cone-shell kink.
fn example_cone_shell_viscosity(
    config: &RunConfig,
    cfg: &MvConfig,
    out: &Path,
) -> Result<(), CliError> {
    let cone = TestFunction::cone_shell(2);
    let x0 = [1.0, 0.0];
    let schedule = config
        .eps
        .clone()
        .unwrap_or(vec![0.1, 0.05, 0.025, 0.0125]);
    let mut family = Vec::new();
    for lambda in [0.1, 0.5, 0.9] {
        family.push(cone_shell_touching_paraboloid(&x0, lambda).map_err(CliError::from)?);
    }
    let report_above = operators::viscosity_check(
        &cone,
        &x0,
        cfg,
        Direction::Above,
        &family,
        &schedule,
        None,
    )?;
    let mut csv = String::new();
    let mut rows = Vec::new();
    for c in &report_above.checks {
        csv.push_str(&format!("# {}\n", c.name));
        let series: Vec<SeriesRow> = c
            .entries
            .iter()
            .map(|e| SeriesRow {
                eps: e.eps,
                value: e.value,
                remainder: e.remainder,
            })
            .collect();
        csv.push_str(&report::series_csv(&series));
        rows.push(json!({ "paraboloid": c.name, "passes": c.passes }));
    }
    let all = report_above.all_pass();
    let verdict = json!({ "config": config, "all_pass": all, "checks": rows });
    finish_example(
        out,
        "cone-shell-viscosity",
        &csv,
        verdict,
        format!("cone-shell-viscosity: all touching checks pass = {all}"),
    )
}
