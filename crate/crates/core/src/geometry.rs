//! Ellipsoids and convex domains with exact containment tests.
//!
//! An ellipsoid is the image of the ball `B_eps(0)` under `y -> x + A y` with
//! `det A = 1`; containment in discs, boxes, and convex polygons reduces to
//! support-function inequalities, which also give the largest admissible scale
//! in closed form.

use crate::error::{Error, Result};
use crate::linalg::{self, SpdShape};
use serde::{Deserialize, Serialize};

/// Curve along which a test function fails to be twice differentiable.
/// Used by the plane quadrature rules to split cells at the crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinkSet {
    /// `<normal, y> = offset` with a unit normal.
    Line { normal: [f64; 2], offset: f64 },
    /// `|y - center| = radius`.
    Circle { center: [f64; 2], radius: f64 },
}

impl KinkSet {
    /// Signed distance-like level function, zero exactly on the kink.
    pub fn level(&self, p: &[f64]) -> f64 {
        match self {
            KinkSet::Line { normal, offset } => normal[0] * p[0] + normal[1] * p[1] - offset,
            KinkSet::Circle { center, radius } => {
                ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius
            }
        }
    }
}

/// The set `{ y : |A^(-1)(y - x)| <= eps } = { x + A y : |y| <= eps }` for a
/// det-one SPD shape `A`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: SpdShape,
    pub scale: f64,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: SpdShape, scale: f64) -> Result<Ellipsoid> {
        if scale <= 0.0 {
            return Err(Error::InvalidDomain(format!("scale {scale} must be positive")));
        }
        if center.len() != shape.dim() {
            return Err(Error::InvalidDomain(
                "center and shape dimensions differ".into(),
            ));
        }
        if (shape.det_root() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidMatrix(
                "ellipsoid shape must have determinant one".into(),
            ));
        }
        Ok(Ellipsoid {
            center,
            shape,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Membership through `|A^(-1)(y - x)| <= eps`.
    pub fn contains(&self, y: &[f64]) -> bool {
        let d = linalg::sub(y, &self.center);
        linalg::norm(&self.shape.apply_inverse(&d)) <= self.scale * (1.0 + 1e-12)
    }

    /// Maps a unit-ball point to the ellipsoid: `x + eps A y`.
    pub fn point(&self, unit: &[f64]) -> Vec<f64> {
        let image = self.shape.apply(&linalg::scale(unit, self.scale));
        linalg::add(&self.center, &image)
    }
}

/// Convex domains used for the containment constraint and the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    Disc {
        center: Vec<f64>,
        radius: f64,
    },
    Rect {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Counterclockwise convex polygon; unit outward normals and offsets are
    /// precomputed so each edge is the half-plane `<normal, y> <= offset`.
    Polygon {
        vertices: Vec<[f64; 2]>,
        normals: Vec<[f64; 2]>,
        offsets: Vec<f64>,
    },
    /// Containment is vacuous; every ellipsoid fits.
    WholeSpace,
}

impl ConvexDomain {
    pub fn disc(center: Vec<f64>, radius: f64) -> Result<ConvexDomain> {
        if !(radius > 0.0) {
            return Err(Error::InvalidDomain(format!("radius {radius} must be positive")));
        }
        Ok(ConvexDomain::Disc { center, radius })
    }

    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> Result<ConvexDomain> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidDomain("box corners must share a dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::InvalidDomain("box has an empty side".into()));
        }
        Ok(ConvexDomain::Rect { lo, hi })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<ConvexDomain> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        let m = vertices.len();
        // convexity and orientation: all consecutive edge crosses positive
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let c = vertices[(i + 2) % m];
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - b[0], c[1] - b[1]];
            let cross = e1[0] * e2[1] - e1[1] * e2[0];
            if cross <= 0.0 {
                return Err(Error::InvalidDomain(
                    "vertices must be counterclockwise and strictly convex".into(),
                ));
            }
        }
        let mut normals = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m);
        for i in 0..m {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            // outward normal of a counterclockwise edge
            let nrm = [e[1] / len, -e[0] / len];
            normals.push(nrm);
            offsets.push(nrm[0] * a[0] + nrm[1] * a[1]);
        }
        Ok(ConvexDomain::Polygon {
            vertices,
            normals,
            offsets,
        })
    }

    pub fn whole_space() -> ConvexDomain {
        ConvexDomain::WholeSpace
    }

    /// Ambient dimension when the domain pins one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexDomain::Disc { center, .. } => Some(center.len()),
            ConvexDomain::Rect { lo, .. } => Some(lo.len()),
            ConvexDomain::Polygon { .. } => Some(2),
            ConvexDomain::WholeSpace => None,
        }
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.boundary_distance(x) >= 0.0
    }

    /// Distance to the boundary, positive inside, negative outside.
    /// 1-Lipschitz for disc and rect; for polygons it is the smallest face
    /// slack, which matches the true distance inside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            ConvexDomain::Disc { center, radius } => radius - linalg::dist(x, center),
            ConvexDomain::Rect { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| (xi - l).min(h - xi))
                .fold(f64::INFINITY, f64::min),
            ConvexDomain::Polygon {
                normals, offsets, ..
            } => normals
                .iter()
                .zip(offsets)
                .map(|(nrm, b)| b - (nrm[0] * x[0] + nrm[1] * x[1]))
                .fold(f64::INFINITY, f64::min),
            ConvexDomain::WholeSpace => f64::INFINITY,
        }
    }

    /// Whether the ellipsoid fits inside the domain. Discs compare the reach
    /// `|c_e - c| + eps lambda_max` against the radius; faceted domains use the
    /// support function of the ellipsoid on each face half-plane.
    pub fn contains_ellipsoid(&self, e: &Ellipsoid) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            ConvexDomain::WholeSpace => true,
            ConvexDomain::Disc { center, radius } => {
                linalg::dist(&e.center, center) + e.scale * e.shape.lambda_max()
                    <= radius + SLACK
            }
            ConvexDomain::Rect { lo, hi } => {
                let n = lo.len();
                for i in 0..n {
                    // face normals +e_i and -e_i
                    let mut axis = vec![0.0; n];
                    axis[i] = 1.0;
                    let reach = linalg::norm(&e.shape.apply(&axis)) * e.scale;
                    if e.center[i] + reach > hi[i] + SLACK || e.center[i] - reach < lo[i] - SLACK
                    {
                        return false;
                    }
                }
                true
            }
            ConvexDomain::Polygon {
                normals, offsets, ..
            } => normals.iter().zip(offsets).all(|(nrm, b)| {
                let reach = linalg::norm(&e.shape.apply(&[nrm[0], nrm[1]])) * e.scale;
                nrm[0] * e.center[0] + nrm[1] * e.center[1] + reach <= b + SLACK
            }),
        }
    }

    /// Largest `eps` with the ellipsoid of the given shape at `x` contained in
    /// the domain, from the same support inequalities. Infinite for the whole
    /// space.
    pub fn max_scale(&self, x: &[f64], shape: &SpdShape) -> Result<f64> {
        if !matches!(self, ConvexDomain::WholeSpace) && self.boundary_distance(x) <= 0.0 {
            return Err(Error::PointOutsideDomain);
        }
        Ok(match self {
            ConvexDomain::WholeSpace => f64::INFINITY,
            ConvexDomain::Disc { center, radius } => {
                (radius - linalg::dist(x, center)) / shape.lambda_max()
            }
            ConvexDomain::Rect { lo, hi } => {
                let n = lo.len();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let mut axis = vec![0.0; n];
                    axis[i] = 1.0;
                    let reach = linalg::norm(&shape.apply(&axis));
                    best = best.min((hi[i] - x[i]) / reach);
                    best = best.min((x[i] - lo[i]) / reach);
                }
                best
            }
            ConvexDomain::Polygon {
                normals, offsets, ..
            } => normals
                .iter()
                .zip(offsets)
                .map(|(nrm, b)| {
                    let reach = linalg::norm(&shape.apply(&[nrm[0], nrm[1]]));
                    (b - (nrm[0] * x[0] + nrm[1] * x[1])) / reach
                })
                .fold(f64::INFINITY, f64::min),
        })
    }

    /// First `t > 0` with `x + t dir` on the boundary, for interior `x`.
    pub fn ray_exit(&self, x: &[f64], dir: &[f64]) -> Option<f64> {
        match self {
            ConvexDomain::WholeSpace => None,
            ConvexDomain::Disc { center, radius } => {
                let d = linalg::sub(x, center);
                let a = linalg::dot(dir, dir);
                let b = linalg::dot(&d, dir);
                let c = linalg::dot(&d, &d) - radius * radius;
                let disc = b * b - a * c;
                if disc <= 0.0 {
                    return None;
                }
                let t = (-b + disc.sqrt()) / a;
                (t > 0.0).then_some(t)
            }
            ConvexDomain::Rect { lo, hi } => {
                let mut best = f64::INFINITY;
                for i in 0..lo.len() {
                    if dir[i] > 0.0 {
                        best = best.min((hi[i] - x[i]) / dir[i]);
                    } else if dir[i] < 0.0 {
                        best = best.min((lo[i] - x[i]) / dir[i]);
                    }
                }
                best.is_finite().then_some(best.max(0.0))
            }
            ConvexDomain::Polygon {
                normals, offsets, ..
            } => {
                let mut best = f64::INFINITY;
                for (nrm, b) in normals.iter().zip(offsets) {
                    let along = nrm[0] * dir[0] + nrm[1] * dir[1];
                    if along > 0.0 {
                        let slack = b - (nrm[0] * x[0] + nrm[1] * x[1]);
                        best = best.min(slack / along);
                    }
                }
                best.is_finite().then_some(best.max(0.0))
            }
        }
    }
}

// Serialized form: externally tagged, matching the CLI configuration grammar
// ({"disc": {...}}, {"rect": {...}}, {"polygon": [...]}, {"whole_space": true}).
#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DomainRepr {
    Disc { center: Vec<f64>, radius: f64 },
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Polygon(Vec<[f64; 2]>),
    WholeSpace(bool),
}

impl Serialize for ConvexDomain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            ConvexDomain::Disc { center, radius } => DomainRepr::Disc {
                center: center.clone(),
                radius: *radius,
            },
            ConvexDomain::Rect { lo, hi } => DomainRepr::Rect {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            ConvexDomain::Polygon { vertices, .. } => DomainRepr::Polygon(vertices.clone()),
            ConvexDomain::WholeSpace => DomainRepr::WholeSpace(true),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConvexDomain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = DomainRepr::deserialize(deserializer)?;
        let built = match repr {
            DomainRepr::Disc { center, radius } => ConvexDomain::disc(center, radius),
            DomainRepr::Rect { lo, hi } => ConvexDomain::rect(lo, hi),
            DomainRepr::Polygon(vertices) => ConvexDomain::polygon(vertices),
            DomainRepr::WholeSpace(_) => Ok(ConvexDomain::whole_space()),
        };
        built.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, SymMatrix};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    fn diag_shape(values: &[f64]) -> SpdShape {
        SpdShape::new(SymMatrix::diag(values)).unwrap().normalized()
    }

    fn unit_disc() -> ConvexDomain {
        ConvexDomain::disc(vec![0.0, 0.0], 1.0).unwrap()
    }

    /// Containment oracle: dense sampling of the ellipsoid boundary.
    fn contains_by_sampling(domain: &ConvexDomain, e: &Ellipsoid) -> bool {
        for k in 0..10_000 {
            let theta = 2.0 * PI * k as f64 / 10_000.0;
            let p = e.point(&[theta.cos(), theta.sin()]);
            if !domain.contains_point(&p) {
                return false;
            }
        }
        true
    }

    #[test]
    fn ellipsoid_volume_scale() {
        // |E_eps| = eps^n |B_1|: check via the product of semi-axes
        let shape = diag_shape(&[2.0, 0.5]);
        let e = Ellipsoid::new(vec![0.3, -0.1], shape, 0.25).unwrap();
        let semi: f64 = e.shape.eigenvalues().iter().map(|l| l * e.scale).product();
        let volume = PI * semi;
        let want = e.scale.powi(2) * PI;
        assert!((volume - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn membership_matches_parametric_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let shape = SpdShape::new(
            SymMatrix::from_rows(&[vec![1.3, 0.4], vec![0.4, 1.1]]).unwrap(),
        )
        .unwrap()
        .normalized();
        let e = Ellipsoid::new(vec![0.2, 0.5], shape, 0.7).unwrap();
        for _ in 0..1000 {
            let y: [f64; 2] = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
            let inside_param = (y[0] * y[0] + y[1] * y[1]).sqrt() <= 1.0;
            let p = e.point(&y);
            if inside_param {
                assert!(e.contains(&p));
            }
            if !e.contains(&p) {
                assert!((y[0] * y[0] + y[1] * y[1]).sqrt() > 1.0);
            }
        }
    }

    #[test]
    fn orthogonal_factor_is_redundant() {
        // A and its symmetric polar factor span the same ellipsoid
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let s = diag_shape(&[1.7, 1.0 / 1.7]);
        let q = Matrix::rotation2(0.83);
        let a = s.matrix().to_matrix().mul(&q);
        let back = crate::linalg::polar_spd(&a).unwrap();
        let e1 = Ellipsoid::new(vec![0.1, 0.2], s, 0.4).unwrap();
        let e2 = Ellipsoid::new(vec![0.1, 0.2], back, 0.4).unwrap();
        for _ in 0..1000 {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            assert_eq!(e1.contains(&p), e2.contains(&p));
        }
    }

    #[test]
    fn scaling_acts_on_probes() {
        let shape = diag_shape(&[2.0, 0.5]);
        let e_small = Ellipsoid::new(vec![0.0, 0.0], shape.clone(), 0.3).unwrap();
        let e_unit = Ellipsoid::new(vec![0.0, 0.0], shape, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..1000 {
            let p = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let scaled = [p[0] / 0.3, p[1] / 0.3];
            assert_eq!(e_small.contains(&p), e_unit.contains(&scaled));
        }
    }

    #[test]
    fn disc_containment_examples() {
        let disc = unit_disc();
        let ball = Ellipsoid::new(vec![0.0, 0.0], SpdShape::identity(2), 0.5).unwrap();
        assert!(disc.contains_ellipsoid(&ball));

        let stretched =
            Ellipsoid::new(vec![0.0, 0.0], diag_shape(&[2.0, 0.5]), 0.6).unwrap();
        assert!(!disc.contains_ellipsoid(&stretched));
        assert!(!contains_by_sampling(&disc, &stretched));
    }

    #[test]
    fn square_containment_example() {
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let e = Ellipsoid::new(vec![0.0, 0.0], diag_shape(&[2.0, 0.5]), 0.45).unwrap();
        assert!(square.contains_ellipsoid(&e));
        assert!(contains_by_sampling(&square, &e));
        let too_big = Ellipsoid::new(vec![0.0, 0.0], diag_shape(&[2.0, 0.5]), 0.55).unwrap();
        assert!(!square.contains_ellipsoid(&too_big));
        assert!(!contains_by_sampling(&square, &too_big));
    }

    #[test]
    fn containment_monotone_in_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        for _ in 0..200 {
            let shape = diag_shape(&[rng.gen_range(0.3..3.0), 1.0]);
            let x = vec![rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)];
            let eps = rng.gen_range(0.01..1.0);
            let e = Ellipsoid::new(x.clone(), shape.clone(), eps).unwrap();
            if square.contains_ellipsoid(&e) {
                let smaller = Ellipsoid::new(x, shape, eps * 0.5).unwrap();
                assert!(square.contains_ellipsoid(&smaller));
            }
        }
    }

    #[test]
    fn max_scale_disc() {
        let disc = unit_disc();
        let id = SpdShape::identity(2);
        assert!((disc.max_scale(&[0.0, 0.0], &id).unwrap() - 1.0).abs() < 1e-14);
        assert!((disc.max_scale(&[0.5, 0.0], &id).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(
            disc.max_scale(&[1.5, 0.0], &id),
            Err(Error::PointOutsideDomain)
        ));
    }

    #[test]
    fn max_scale_square_matches_bisection() {
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let shape = diag_shape(&[2.0, 0.5]);
        let s = square.max_scale(&[0.0, 0.0], &shape).unwrap();
        assert!((s - 0.5).abs() < 1e-12);

        // bisection oracle on contains_ellipsoid
        let feasible = |eps: f64| {
            square.contains_ellipsoid(
                &Ellipsoid::new(vec![0.0, 0.0], shape.clone(), eps).unwrap(),
            )
        };
        let (mut lo, mut hi) = (1e-6, 4.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - s).abs() < 1e-9);
        assert!(feasible(s * (1.0 - 1e-9)));
    }

    #[test]
    fn max_scale_polygon() {
        // the unit square as a polygon agrees with the rect variant
        let poly = ConvexDomain::polygon(vec![
            [-1.0, -1.0],
            [1.0, -1.0],
            [1.0, 1.0],
            [-1.0, 1.0],
        ])
        .unwrap();
        let shape = diag_shape(&[2.0, 0.5]);
        let s = poly.max_scale(&[0.0, 0.0], &shape).unwrap();
        assert!((s - 0.5).abs() < 1e-12);
        let e = Ellipsoid::new(vec![0.0, 0.0], shape, s * (1.0 - 1e-9)).unwrap();
        assert!(poly.contains_ellipsoid(&e));
    }

    #[test]
    fn polygon_rejects_bad_orientation() {
        let cw = ConvexDomain::polygon(vec![
            [-1.0, -1.0],
            [-1.0, 1.0],
            [1.0, 1.0],
            [1.0, -1.0],
        ]);
        assert!(matches!(cw, Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn boundary_distance_is_one_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let poly =
            ConvexDomain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.5, 1.5], [0.2, 1.0]]).unwrap();
        for _ in 0..500 {
            let a = [rng.gen_range(-1.0..3.0), rng.gen_range(-1.0..2.0)];
            let b = [rng.gen_range(-1.0..3.0), rng.gen_range(-1.0..2.0)];
            let da = poly.boundary_distance(&a);
            let db = poly.boundary_distance(&b);
            let step = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!((da - db).abs() <= step + 1e-12);
        }
    }

    #[test]
    fn whole_space_contains_everything() {
        let ws = ConvexDomain::whole_space();
        let e = Ellipsoid::new(vec![5.0, -3.0], diag_shape(&[100.0, 0.01]), 50.0).unwrap();
        assert!(ws.contains_ellipsoid(&e));
        assert_eq!(ws.max_scale(&[0.0, 0.0], &e.shape).unwrap(), f64::INFINITY);
    }

    #[test]
    fn domain_json_round_trip() {
        let domains = vec![
            unit_disc(),
            ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            ConvexDomain::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap(),
            ConvexDomain::whole_space(),
        ];
        for d in domains {
            let json = serde_json::to_string(&d).unwrap();
            let back: ConvexDomain = serde_json::from_str(&json).unwrap();
            assert_eq!(d, back);
        }
        let ws: ConvexDomain = serde_json::from_str("{\"whole_space\": true}").unwrap();
        assert_eq!(ws, ConvexDomain::whole_space());
        let disc: ConvexDomain =
            serde_json::from_str("{\"disc\": {\"center\": [0.0, 0.0], \"radius\": 1.0}}").unwrap();
        assert_eq!(disc, unit_disc());
    }

    #[test]
    fn ray_exit_matches_geometry() {
        let disc = unit_disc();
        let t = disc.ray_exit(&[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-14);
        let square = ConvexDomain::rect(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let t = square.ray_exit(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((t - 1.0 / 0.8).abs() < 1e-12);
    }
}
