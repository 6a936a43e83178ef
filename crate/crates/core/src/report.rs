//! Rate fitting, tabulation, and serialization of experiment outputs.

use serde::{Deserialize, Serialize};

/// Least-squares fit of `log |R|` against `log eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    /// Usable points `(log eps, log |R|)`, remainders below the floor excluded.
    pub points: Vec<(f64, f64)>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual_rms: f64,
    /// Entries dropped for sitting below the error floor.
    pub excluded: usize,
    /// Fewer than two usable points: the remainder is indistinguishable from
    /// quadrature noise everywhere ("exact" outcome, not an error).
    pub all_below_floor: bool,
}

/// Ordinary least squares on `(log eps, log |R|)` over entries with
/// `|remainder| > floor`. Deterministic.
pub fn fit_rate(entries: &[(f64, f64)], floor: f64) -> RateFit {
    let mut points = Vec::with_capacity(entries.len());
    let mut excluded = 0;
    for &(eps, r) in entries {
        if r.abs() > floor {
            points.push((eps.ln(), r.abs().ln()));
        } else {
            excluded += 1;
        }
    }
    if points.len() < 2 {
        return RateFit {
            points,
            slope: None,
            intercept: None,
            residual_rms: 0.0,
            excluded,
            all_below_floor: true,
        };
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual_rms = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    RateFit {
        points,
        slope: Some(slope),
        intercept: Some(intercept),
        residual_rms,
        excluded,
        all_below_floor: false,
    }
}

/// One operator evaluation, as serialized to CSV and JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MvRecord {
    pub variant: String,
    pub function: String,
    pub x: Vec<f64>,
    pub eps: f64,
    pub value: f64,
    pub remainder: f64,
    pub lambda_max: f64,
    pub evals: usize,
}

/// Full-precision decimal form that round-trips f64 exactly (17 significant
/// digits).
pub fn format_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

fn format_point(x: &[f64]) -> String {
    let coords: Vec<String> = x.iter().map(|v| format_f64(*v)).collect();
    coords.join(";")
}

/// CSV with columns `variant,function,x,eps,value,remainder,lambda_max,evals`.
pub fn records_csv(rows: &[MvRecord]) -> String {
    let mut out = String::from("variant,function,x,eps,value,remainder,lambda_max,evals\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.variant,
            r.function,
            format_point(&r.x),
            format_f64(r.eps),
            format_f64(r.value),
            format_f64(r.remainder),
            format_f64(r.lambda_max),
            r.evals
        ));
    }
    out
}

/// One row of a remainder-series table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRow {
    pub eps: f64,
    pub value: f64,
    pub remainder: f64,
}

/// CSV with columns `eps,value,remainder,abs_remainder,slope_running`, the
/// running slope taken between consecutive rows.
pub fn series_csv(rows: &[SeriesRow]) -> String {
    let mut out = String::from("eps,value,remainder,abs_remainder,slope_running\n");
    for (k, r) in rows.iter().enumerate() {
        let slope = if k == 0 {
            String::new()
        } else {
            let prev = &rows[k - 1];
            let num = (r.remainder.abs().max(f64::MIN_POSITIVE)
                / prev.remainder.abs().max(f64::MIN_POSITIVE))
            .ln();
            let den = (r.eps / prev.eps).ln();
            format_f64(num / den)
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_f64(r.eps),
            format_f64(r.value),
            format_f64(r.remainder),
            format_f64(r.remainder.abs()),
            slope
        ));
    }
    out
}
