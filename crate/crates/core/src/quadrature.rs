//! High-order averages over balls, spheres, and ellipsoids.
//!
//! Solid and surface averages are computed by pullback to the reference ball:
//! radial Gauss-Legendre crossed with a uniform angular rule in the plane, and
//! with a Gauss-Legendre (polar) x trapezoid (azimuth) product on the sphere.
//! Integrands that carry declared kinks get a plane rule that splits the
//! angular range at the kink crossings and the radial segments at the exact
//! crossing radii, so every sub-cell sees a smooth branch.

use crate::error::{Error, Result};
use crate::geometry::KinkSet;
use crate::linalg::{self, SpdShape};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Whether an ellipsoid average runs over the solid body or its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageKind {
    Solid,
    Surface,
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_q and P_q' at x
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if q == 1 { x } else { p1 };
            dp = q as f64 * (x * p - p0) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[q - 1 - i] = x;
        weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Nodes of a Gauss-Legendre rule mapped to [a, b].
fn gl_on_interval(q: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(q);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| (mid + half * t, half * w))
        .collect()
}

/// Fixed-order product rules over the reference ball and sphere.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    radial_order: usize,
    angular_order: usize,
    /// Angular budget used when an integrand declares kinks (plane only).
    kink_angular_order: usize,
    /// Unit-ball nodes with weights summing to |B_1|.
    solid_nodes: Vec<(Vec<f64>, f64)>,
    /// Unit-sphere nodes with weights summing to |bd B_1|.
    surface_nodes: Vec<(Vec<f64>, f64)>,
}

impl QuadratureRule {
    pub fn new(dim: usize, radial_order: usize, angular_order: usize) -> Result<QuadratureRule> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidConfig(format!(
                "quadrature supports dimensions 2 and 3, got {dim}"
            )));
        }
        if radial_order == 0 || angular_order < 4 {
            return Err(Error::InvalidConfig(
                "radial order must be >= 1 and angular order >= 4".into(),
            ));
        }
        let surface_nodes = match dim {
            2 => (0..angular_order)
                .map(|j| {
                    let theta = TWO_PI * (j as f64 + 0.5) / angular_order as f64;
                    (vec![theta.cos(), theta.sin()], TWO_PI / angular_order as f64)
                })
                .collect::<Vec<_>>(),
            _ => {
                let polar = (angular_order / 4).max(4);
                let mut nodes = Vec::with_capacity(polar * angular_order);
                for (t, wt) in gl_on_interval(polar, -1.0, 1.0) {
                    let rho = (1.0 - t * t).sqrt();
                    for j in 0..angular_order {
                        let psi = TWO_PI * (j as f64 + 0.5) / angular_order as f64;
                        nodes.push((
                            vec![rho * psi.cos(), rho * psi.sin(), t],
                            wt * TWO_PI / angular_order as f64,
                        ));
                    }
                }
                nodes
            }
        };
        let mut solid_nodes = Vec::with_capacity(radial_order * surface_nodes.len());
        for (r, wr) in gl_on_interval(radial_order, 0.0, 1.0) {
            let jac = r.powi(dim as i32 - 1);
            for (sigma, ws) in &surface_nodes {
                solid_nodes.push((linalg::scale(sigma, r), wr * jac * ws));
            }
        }
        Ok(QuadratureRule {
            dim,
            radial_order,
            angular_order,
            kink_angular_order: 256,
            solid_nodes,
            surface_nodes,
        })
    }

    pub fn with_kink_order(mut self, order: usize) -> QuadratureRule {
        self.kink_angular_order = order.max(self.angular_order);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ball_measure(dim: usize) -> f64 {
        match dim {
            2 => std::f64::consts::PI,
            _ => 4.0 * std::f64::consts::PI / 3.0,
        }
    }

    pub fn sphere_measure(dim: usize) -> f64 {
        dim as f64 * Self::ball_measure(dim)
    }

    pub fn solid_weight_sum(&self) -> f64 {
        self.solid_nodes.iter().map(|(_, w)| w).sum()
    }

    pub fn surface_weight_sum(&self) -> f64 {
        self.surface_nodes.iter().map(|(_, w)| w).sum()
    }

    fn eval(g: &dyn Fn(&[f64]) -> f64, p: &[f64]) -> Result<f64> {
        let v = g(p);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { node: p.to_vec() });
        }
        Ok(v)
    }

    /// Average of `g` over the solid ball `B_eps(x)`.
    pub fn ball_average(&self, g: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Result<f64> {
        let mut acc = 0.0;
        let mut total = 0.0;
        for (node, w) in &self.solid_nodes {
            let p = linalg::add(x, &linalg::scale(node, eps));
            acc += w * Self::eval(g, &p)?;
            total += w;
        }
        Ok(acc / total)
    }

    /// Average of `g` over the sphere `bd B_eps(x)`.
    pub fn sphere_average(&self, g: &dyn Fn(&[f64]) -> f64, x: &[f64], eps: f64) -> Result<f64> {
        let mut acc = 0.0;
        let mut total = 0.0;
        for (node, w) in &self.surface_nodes {
            let p = linalg::add(x, &linalg::scale(node, eps));
            acc += w * Self::eval(g, &p)?;
            total += w;
        }
        Ok(acc / total)
    }

    /// Pullback average over the ellipsoid spanned by `shape` at `x`:
    /// the solid kind is the mean of `u(x + A y)` over `y` in `B_eps(0)`, the
    /// surface kind the mean over `bd B_eps(0)`. Declared kinks route the
    /// plane rule through the splitting path.
    pub fn ellipsoid_average(
        &self,
        u: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kind: AverageKind,
        kinks: &[KinkSet],
    ) -> Result<f64> {
        if self.dim == 2 && !kinks.is_empty() {
            if let Some(value) = self.kinked_plane_average(u, x, shape, eps, kind, kinks)? {
                return Ok(value);
            }
        }
        let nodes = match kind {
            AverageKind::Solid => &self.solid_nodes,
            AverageKind::Surface => &self.surface_nodes,
        };
        let mut acc = 0.0;
        let mut total = 0.0;
        for (node, w) in nodes {
            let p = linalg::add(x, &shape.apply(&linalg::scale(node, eps)));
            acc += w * Self::eval(u, &p)?;
            total += w;
        }
        Ok(acc / total)
    }

    /// Ratio of the weighted surface integrals over the ellipsoid boundary:
    /// integral of `u(y) |(A A^t)^(-1)(y-x)|^(-1)` over the integral of the
    /// weight alone. Computed directly from the boundary parametrization with
    /// explicit weight and surface-element factors.
    pub fn weighted_surface_average(
        &self,
        u: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kinks: &[KinkSet],
    ) -> Result<f64> {
        let (num, den) = self.weighted_surface_integrals(u, x, shape, eps, kinks)?;
        Ok(num / den)
    }

    /// Numerator and denominator of the weighted surface average; the
    /// denominator equals `n eps^(n-2) |B_1|` up to quadrature error.
    pub fn weighted_surface_integrals(
        &self,
        u: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kinks: &[KinkSet],
    ) -> Result<(f64, f64)> {
        let n = self.dim;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut node_term = |sigma: &[f64], w: f64| -> Result<()> {
            let y = linalg::add(x, &shape.apply(&linalg::scale(sigma, eps)));
            // weight |(A A^t)^(-1)(y - x)|^(-1) and the surface element of
            // z -> x + A z with normal sigma, det A = 1
            let inv = shape.apply_inverse(sigma);
            let weight = 1.0 / (eps * linalg::norm(&inv));
            let element = linalg::norm(&inv) * eps.powi(n as i32 - 1);
            num += w * Self::eval(u, &y)? * weight * element;
            den += w * weight * element;
            Ok(())
        };
        if n == 2 && !kinks.is_empty() {
            if let Some(arcs) = self.boundary_arcs(x, shape, eps, kinks) {
                for (a, b) in arcs {
                    let m = self.arc_order(b - a);
                    for (theta, w) in gl_on_interval(m, a, b) {
                        node_term(&[theta.cos(), theta.sin()], w)?;
                    }
                }
                return Ok((num, den));
            }
        }
        for (sigma, w) in &self.surface_nodes {
            node_term(sigma, *w)?;
        }
        Ok((num, den))
    }

    fn arc_order(&self, len: f64) -> usize {
        let share = (self.kink_angular_order as f64 * len / TWO_PI).ceil() as usize;
        share.clamp(8, self.kink_angular_order)
    }

    // --- kink-aware plane rules ---------------------------------------------

    /// Crossing radii of the ray `r -> x + r A omega` with the kink sets,
    /// restricted to `(0, rmax)`. Closed form for lines and circles.
    fn radial_crossings(
        x: &[f64],
        arm: &[f64],
        rmax: f64,
        kinks: &[KinkSet],
        out: &mut Vec<f64>,
    ) {
        out.clear();
        let tol = 1e-13 * rmax;
        for kink in kinks {
            match kink {
                KinkSet::Line { normal, offset } => {
                    let along = normal[0] * arm[0] + normal[1] * arm[1];
                    if along.abs() > 1e-300 {
                        let r = (offset - (normal[0] * x[0] + normal[1] * x[1])) / along;
                        if r > tol && r < rmax - tol {
                            out.push(r);
                        }
                    }
                }
                KinkSet::Circle { center, radius } => {
                    let d = [x[0] - center[0], x[1] - center[1]];
                    let a = arm[0] * arm[0] + arm[1] * arm[1];
                    let b = d[0] * arm[0] + d[1] * arm[1];
                    let c = d[0] * d[0] + d[1] * d[1] - radius * radius;
                    let disc = b * b - a * c;
                    if disc > 0.0 {
                        let sq = disc.sqrt();
                        for r in [(-b - sq) / a, (-b + sq) / a] {
                            if r > tol && r < rmax - tol {
                                out.push(r);
                            }
                        }
                    }
                }
            }
        }
        out.sort_by(|p, q| p.partial_cmp(q).expect("finite radii"));
    }

    /// Angles where a kink crosses the ellipsoid boundary `x + eps A omega`.
    fn boundary_crossing_angles(
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kinks: &[KinkSet],
        out: &mut Vec<f64>,
    ) {
        for kink in kinks {
            match kink {
                KinkSet::Line { normal, offset } => {
                    let w = shape.apply(&[normal[0], normal[1]]);
                    let amp = eps * linalg::norm(&w);
                    let s = offset - (normal[0] * x[0] + normal[1] * x[1]);
                    if amp > 0.0 && s.abs() <= amp {
                        let phase = w[1].atan2(w[0]);
                        let delta = (s / amp).clamp(-1.0, 1.0).acos();
                        out.push((phase + delta).rem_euclid(TWO_PI));
                        out.push((phase - delta).rem_euclid(TWO_PI));
                    }
                }
                KinkSet::Circle { .. } => {
                    // trigonometric level of degree two: locate sign changes on
                    // a fine scan and refine by bisection
                    let level = |theta: f64| {
                        let p = linalg::add(
                            x,
                            &shape.apply(&[eps * theta.cos(), eps * theta.sin()]),
                        );
                        kink.level(&p)
                    };
                    const SCAN: usize = 1024;
                    let mut prev = level(0.0);
                    for j in 1..=SCAN {
                        let theta = TWO_PI * j as f64 / SCAN as f64;
                        let cur = level(theta);
                        if prev == 0.0 {
                            out.push(TWO_PI * (j as f64 - 1.0) / SCAN as f64);
                        } else if prev * cur < 0.0 {
                            let mut lo = TWO_PI * (j as f64 - 1.0) / SCAN as f64;
                            let mut hi = theta;
                            let mut flo = prev;
                            for _ in 0..52 {
                                let mid = 0.5 * (lo + hi);
                                let fmid = level(mid);
                                if flo * fmid <= 0.0 {
                                    hi = mid;
                                } else {
                                    lo = mid;
                                    flo = fmid;
                                }
                            }
                            out.push((0.5 * (lo + hi)).rem_euclid(TWO_PI));
                        }
                        prev = cur;
                    }
                }
            }
        }
    }

    /// Angular breakpoints for the solid plane rule: boundary crossings plus
    /// angles where the per-ray crossing pattern changes (tangencies).
    fn solid_breakpoints(
        &self,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kinks: &[KinkSet],
    ) -> Vec<f64> {
        let mut angles = Vec::new();
        Self::boundary_crossing_angles(x, shape, eps, kinks, &mut angles);

        let mut scratch = Vec::new();
        let count_at = |theta: f64, scratch: &mut Vec<f64>| -> usize {
            let arm = shape.apply(&[theta.cos(), theta.sin()]);
            Self::radial_crossings(x, &arm, eps, kinks, scratch);
            scratch.len()
        };
        const SCAN: usize = 1024;
        let mut prev = count_at(0.0, &mut scratch);
        for j in 1..=SCAN {
            let theta = TWO_PI * j as f64 / SCAN as f64;
            let cur = count_at(theta, &mut scratch);
            if cur != prev {
                let mut lo = TWO_PI * (j as f64 - 1.0) / SCAN as f64;
                let mut hi = theta;
                let clo = prev;
                for _ in 0..52 {
                    let mid = 0.5 * (lo + hi);
                    if count_at(mid, &mut scratch) == clo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                angles.push((0.5 * (lo + hi)).rem_euclid(TWO_PI));
            }
            prev = cur;
        }
        angles.sort_by(|p, q| p.partial_cmp(q).expect("finite angles"));
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        angles
    }

    /// Arcs of `[0, 2 pi)` delimited by boundary crossings, or `None` when the
    /// kinks never touch the boundary.
    fn boundary_arcs(
        &self,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kinks: &[KinkSet],
    ) -> Option<Vec<(f64, f64)>> {
        let mut angles = Vec::new();
        Self::boundary_crossing_angles(x, shape, eps, kinks, &mut angles);
        if angles.is_empty() {
            return None;
        }
        angles.sort_by(|p, q| p.partial_cmp(q).expect("finite angles"));
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        Some(Self::arcs_from(&angles))
    }

    fn arcs_from(angles: &[f64]) -> Vec<(f64, f64)> {
        let mut arcs = Vec::with_capacity(angles.len());
        for i in 0..angles.len() {
            let a = angles[i];
            let b = if i + 1 < angles.len() {
                angles[i + 1]
            } else {
                angles[0] + TWO_PI
            };
            if b - a > 1e-12 {
                arcs.push((a, b));
            }
        }
        arcs
    }

    /// Split plane rule. Returns `Ok(None)` when the ellipsoid never meets a
    /// kink, in which case the caller falls back to the product rule.
    fn kinked_plane_average(
        &self,
        u: &dyn Fn(&[f64]) -> f64,
        x: &[f64],
        shape: &SpdShape,
        eps: f64,
        kind: AverageKind,
        kinks: &[KinkSet],
    ) -> Result<Option<f64>> {
        match kind {
            AverageKind::Surface => {
                let Some(arcs) = self.boundary_arcs(x, shape, eps, kinks) else {
                    return Ok(None);
                };
                let mut acc = 0.0;
                let mut total = 0.0;
                for (a, b) in arcs {
                    let m = self.arc_order(b - a);
                    for (theta, w) in gl_on_interval(m, a, b) {
                        let p = linalg::add(
                            x,
                            &shape.apply(&[eps * theta.cos(), eps * theta.sin()]),
                        );
                        acc += w * Self::eval(u, &p)?;
                        total += w;
                    }
                }
                Ok(Some(acc / total))
            }
            AverageKind::Solid => {
                let breakpoints = self.solid_breakpoints(x, shape, eps, kinks);
                if breakpoints.is_empty() {
                    // kinks may still cut the interior without angular structure;
                    // detect by probing one ray
                    let arm = shape.apply(&[1.0, 0.0]);
                    let mut probe = Vec::new();
                    Self::radial_crossings(x, &arm, eps, kinks, &mut probe);
                    if probe.is_empty() {
                        return Ok(None);
                    }
                }
                let arcs = if breakpoints.is_empty() {
                    vec![(0.0, TWO_PI)]
                } else {
                    Self::arcs_from(&breakpoints)
                };
                let mut acc = 0.0;
                let mut total = 0.0;
                let mut radii = Vec::new();
                for (a, b) in arcs {
                    let m = self.arc_order(b - a);
                    for (theta, wt) in gl_on_interval(m, a, b) {
                        let dir = [theta.cos(), theta.sin()];
                        let arm = shape.apply(&dir);
                        Self::radial_crossings(x, &arm, eps, kinks, &mut radii);
                        let mut inner = 0.0;
                        let mut lo = 0.0;
                        let splits = radii.clone();
                        for hi in splits.into_iter().chain(std::iter::once(eps)) {
                            if hi - lo < 1e-15 * eps {
                                lo = hi;
                                continue;
                            }
                            for (r, wr) in gl_on_interval(self.radial_order, lo, hi) {
                                let p = linalg::add(x, &linalg::scale(&arm, r));
                                inner += wr * r * Self::eval(u, &p)?;
                            }
                            lo = hi;
                        }
                        acc += wt * inner;
                        total += wt * 0.5 * eps * eps;
                    }
                }
                Ok(Some(acc / total))
            }
        }
    }
}
