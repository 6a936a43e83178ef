//! Constrained minimization over determinant-one SPD shapes.
//!
//! Shapes are parameterized by a rotation and zero-sum log-eigenvalues, so the
//! det-one constraint and the eigenvalue cap are exact. The minimizer runs a
//! deterministic coarse grid (plus injected candidates: the identity, the
//! clamped closed-form optimizer when a Hessian hint is available, and any
//! caller-supplied shapes) followed by coordinate-wise golden-section
//! refinement. No randomness anywhere so results are reproducible bit for bit.

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::linalg::{optimal_shape, Matrix, SpdShape, SymMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type Objective<'a> = &'a (dyn Fn(&SpdShape) -> Result<f64> + Sync);

/// Grid sizes and refinement effort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchBudget {
    /// Rotation angles in `[0, pi)` for the plane; the sphere always uses the
    /// fixed 60-frame icosahedral set.
    pub rotations: usize,
    /// Points per log-eigenvalue axis.
    pub eig_grid: usize,
    /// Coordinate-descent sweeps of golden-section refinement.
    pub refine_sweeps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            rotations: 16,
            eig_grid: 17,
            refine_sweeps: 3,
        }
    }
}

/// Outcome of a shape search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub value: f64,
    pub shape: SpdShape,
    pub lambda_max: f64,
    pub evals: usize,
    /// Best grid/candidate value before refinement.
    pub coarse_value: f64,
}

/// Extra inputs threaded through a search.
#[derive(Clone, Copy, Default)]
pub struct SearchOptions<'a> {
    /// Hessian of the integrand at the center, when exactly known; injects the
    /// clamped closed-form optimizer as a candidate.
    pub hessian_hint: Option<&'a SymMatrix>,
    /// Shapes evaluated verbatim (subject to feasibility).
    pub extra_candidates: &'a [SpdShape],
}

/// Minimize over det-one shapes with `lambda_max <= bound`.
pub fn inf_restricted(
    objective: Objective,
    dim: usize,
    bound: f64,
    budget: &SearchBudget,
    options: SearchOptions,
) -> Result<SearchResult> {
    if bound < 1.0 {
        return Err(Error::InfeasibleBound { bound });
    }
    let log_cap = bound.ln();
    let feasible = move |shape: &SpdShape| shape.lambda_max() <= bound * (1.0 + 1e-12);
    run_search(objective, dim, log_cap, &feasible, budget, options)
}

/// Minimize over det-one shapes whose ellipsoid at `x` with scale `eps` stays
/// inside the domain. The identity must be feasible, i.e.
/// `eps < max_scale(domain, x, I)`.
pub fn inf_domain(
    objective: Objective,
    dim: usize,
    domain: &ConvexDomain,
    x: &[f64],
    eps: f64,
    budget: &SearchBudget,
    options: SearchOptions,
) -> Result<SearchResult> {
    let identity_cap = domain.max_scale(x, &SpdShape::identity(dim))?;
    if eps >= identity_cap {
        return Err(Error::EllipsoidEscapesDomain);
    }
    let feasible = {
        let domain = domain.clone();
        let x = x.to_vec();
        move |shape: &SpdShape| match domain.max_scale(&x, shape) {
            Ok(cap) => eps <= cap * (1.0 + 1e-9),
            Err(_) => false,
        }
    };
    // largest eigenvalue any contained ellipsoid can carry, for the grid range
    let lambda_cap = match domain {
        ConvexDomain::WholeSpace => 1e3,
        ConvexDomain::Disc { center, radius } => {
            (radius - crate::linalg::dist(x, center)) / eps
        }
        ConvexDomain::Rect { lo, hi } => {
            let mut far: f64 = 0.0;
            for corner in 0..(1usize << lo.len()) {
                let v: Vec<f64> = (0..lo.len())
                    .map(|i| if corner >> i & 1 == 1 { hi[i] } else { lo[i] })
                    .collect();
                far = far.max(crate::linalg::dist(x, &v));
            }
            far / eps
        }
        ConvexDomain::Polygon { vertices, .. } => {
            vertices
                .iter()
                .map(|v| crate::linalg::dist(x, v))
                .fold(0.0f64, f64::max)
                / eps
        }
    };
    let log_cap = lambda_cap.clamp(1.0, 1e3).ln();
    run_search(objective, dim, log_cap, &feasible, budget, options)
}

// ---------------------------------------------------------------------------
// parameterization
// ---------------------------------------------------------------------------

/// Rotation parameters plus free log-eigenvalues (the last one is the negated
/// sum, keeping the determinant at one).
#[derive(Debug, Clone)]
struct ShapeParam {
    dim: usize,
    /// n = 2: one angle. n = 3: index into the frame set plus three Euler
    /// offsets applied on top of it.
    rotation: Vec<f64>,
    base_frame: Option<Matrix>,
    log_eigs: Vec<f64>,
}

impl ShapeParam {
    fn identity(dim: usize) -> ShapeParam {
        ShapeParam {
            dim,
            rotation: vec![0.0; if dim == 2 { 1 } else { 3 }],
            base_frame: None,
            log_eigs: vec![0.0; dim - 1],
        }
    }

    fn frame(&self) -> Matrix {
        match self.dim {
            2 => Matrix::rotation2(self.rotation[0]),
            _ => {
                let base = self
                    .base_frame
                    .clone()
                    .unwrap_or_else(|| Matrix::identity(3));
                base.mul(&euler_zyz(
                    self.rotation[0],
                    self.rotation[1],
                    self.rotation[2],
                ))
            }
        }
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let tail: f64 = -self.log_eigs.iter().sum::<f64>();
        self.log_eigs
            .iter()
            .copied()
            .chain(std::iter::once(tail))
            .map(f64::exp)
            .collect()
    }

    fn shape(&self) -> SpdShape {
        let mut s = SpdShape::from_spectrum(&self.eigenvalues(), &self.frame())
            .expect("positive spectrum by construction");
        // determinant is structurally one
        s = s.normalized();
        s
    }

    fn coordinates(&self) -> usize {
        self.rotation.len() + self.log_eigs.len()
    }

    fn get(&self, k: usize) -> f64 {
        if k < self.rotation.len() {
            self.rotation[k]
        } else {
            self.log_eigs[k - self.rotation.len()]
        }
    }

    fn set(&mut self, k: usize, v: f64) {
        if k < self.rotation.len() {
            self.rotation[k] = v;
        } else {
            self.log_eigs[k - self.rotation.len()] = v;
        }
    }
}

fn euler_zyz(a: f64, b: f64, c: f64) -> Matrix {
    let rz = |t: f64| {
        let (s, co) = t.sin_cos();
        Matrix::from_rows(&[
            vec![co, -s, 0.0],
            vec![s, co, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .expect("3x3")
    };
    let ry = |t: f64| {
        let (s, co) = t.sin_cos();
        Matrix::from_rows(&[
            vec![co, 0.0, s],
            vec![0.0, 1.0, 0.0],
            vec![-s, 0.0, co],
        ])
        .expect("3x3")
    };
    rz(a).mul(&ry(b)).mul(&rz(c))
}

/// The 60 rotations of the icosahedral group, from the binary icosahedral
/// quaternions (antipodal pairs collapsed). Also exported as the frame set of
/// the discrete stencil in three dimensions.
pub fn sphere_frames() -> Vec<Matrix> {
    icosahedral_frames()
}

fn icosahedral_frames() -> Vec<Matrix> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut quats: Vec<[f64; 4]> = Vec::new();
    for i in 0..4 {
        for s in [1.0f64, -1.0] {
            let mut q = [0.0; 4];
            q[i] = s;
            quats.push(q);
        }
    }
    for a in [0.5f64, -0.5] {
        for b in [0.5f64, -0.5] {
            for c in [0.5f64, -0.5] {
                for d in [0.5f64, -0.5] {
                    quats.push([a, b, c, d]);
                }
            }
        }
    }
    const EVEN_PERMS: [[usize; 4]; 12] = [
        [0, 1, 2, 3],
        [0, 2, 3, 1],
        [0, 3, 1, 2],
        [1, 0, 3, 2],
        [1, 2, 0, 3],
        [1, 3, 2, 0],
        [2, 0, 1, 3],
        [2, 1, 3, 0],
        [2, 3, 0, 1],
        [3, 0, 2, 1],
        [3, 1, 0, 2],
        [3, 2, 1, 0],
    ];
    let base = [0.0, 1.0, 1.0 / phi, phi];
    for perm in EVEN_PERMS {
        for s1 in [0.5f64, -0.5] {
            for s2 in [0.5f64, -0.5] {
                for s3 in [0.5f64, -0.5] {
                    let signed = [0.0, base[1] * s1, base[2] * s2, base[3] * s3];
                    let mut q = [0.0; 4];
                    for (k, &p) in perm.iter().enumerate() {
                        q[k] = signed[p];
                    }
                    quats.push(q);
                }
            }
        }
    }
    // collapse antipodal pairs deterministically
    let mut rotations = Vec::with_capacity(60);
    let mut seen: Vec<[f64; 4]> = Vec::new();
    for q in quats {
        let canon = {
            let lead = q.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
            if lead < 0.0 {
                [-q[0], -q[1], -q[2], -q[3]]
            } else {
                q
            }
        };
        if seen
            .iter()
            .any(|p| p.iter().zip(&canon).all(|(a, b)| (a - b).abs() < 1e-9))
        {
            continue;
        }
        seen.push(canon);
        rotations.push(quat_to_matrix(&canon));
    }
    debug_assert_eq!(rotations.len(), 60);
    rotations
}

fn quat_to_matrix(q: &[f64; 4]) -> Matrix {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix::from_rows(&[
        vec![
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        vec![
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        vec![
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
    .expect("3x3")
}

// ---------------------------------------------------------------------------
// engine
// ---------------------------------------------------------------------------

struct Evaluator<'a> {
    objective: Objective<'a>,
    evals: std::cell::Cell<usize>,
}

impl<'a> Evaluator<'a> {
    fn eval(&self, shape: &SpdShape) -> Result<f64> {
        self.evals.set(self.evals.get() + 1);
        let v = (self.objective)(shape)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                shape: format!("{:?}", shape.matrix()),
            });
        }
        Ok(v)
    }
}

fn run_search(
    objective: Objective,
    dim: usize,
    log_cap: f64,
    feasible: &(dyn Fn(&SpdShape) -> bool + Sync),
    budget: &SearchBudget,
    options: SearchOptions,
) -> Result<SearchResult> {
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidConfig(format!(
            "shape search supports dimensions 2 and 3, got {dim}"
        )));
    }
    let ev = Evaluator {
        objective,
        evals: std::cell::Cell::new(0),
    };

    // coarse grid parameters, lexicographic order for deterministic ties
    let mut params: Vec<ShapeParam> = vec![ShapeParam::identity(dim)];
    let grid_t: Vec<f64> = if budget.eig_grid <= 1 || log_cap == 0.0 {
        vec![0.0]
    } else {
        (0..budget.eig_grid)
            .map(|j| -log_cap + 2.0 * log_cap * j as f64 / (budget.eig_grid - 1) as f64)
            .collect()
    };
    if dim == 2 {
        for k in 0..budget.rotations.max(1) {
            let theta = std::f64::consts::PI * k as f64 / budget.rotations.max(1) as f64;
            for &t in &grid_t {
                let mut p = ShapeParam::identity(2);
                p.rotation[0] = theta;
                p.log_eigs[0] = t;
                params.push(p);
            }
        }
    } else {
        for frame in icosahedral_frames() {
            for &t1 in &grid_t {
                for &t2 in &grid_t {
                    if (-(t1 + t2)).abs() > log_cap + 1e-12 {
                        continue;
                    }
                    let mut p = ShapeParam::identity(3);
                    p.base_frame = Some(frame.clone());
                    p.log_eigs = vec![t1, t2];
                    params.push(p);
                }
            }
        }
    }

    // evaluate the grid in parallel, then reduce in grid order
    let grid_values: Vec<Option<Result<f64>>> = params
        .par_iter()
        .map(|p| {
            let shape = p.shape();
            if feasible(&shape) {
                Some((objective)(&shape))
            } else {
                None
            }
        })
        .collect();
    let mut best: Option<(f64, ShapeParam, SpdShape)> = None;
    let mut grid_evals = 0usize;
    for (p, slot) in params.iter().zip(grid_values) {
        let Some(outcome) = slot else { continue };
        grid_evals += 1;
        let v = outcome?;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                shape: format!("{:?}", p.shape().matrix()),
            });
        }
        if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
            let shape = p.shape();
            best = Some((v, p.clone(), shape));
        }
    }
    ev.evals.set(ev.evals.get() + grid_evals);
    let (mut best_value, best_param, mut best_shape) =
        best.expect("identity candidate is always feasible");

    // injected candidates: clamped closed-form optimizer and caller extras
    let try_candidate = |shape: SpdShape,
                             best_value: &mut f64,
                             best_shape: &mut SpdShape,
                             best_param: &mut Option<ShapeParam>|
     -> Result<()> {
        if !feasible(&shape) {
            return Ok(());
        }
        let v = ev.eval(&shape)?;
        if v < *best_value {
            *best_value = v;
            *best_shape = shape;
            *best_param = None;
        }
        Ok(())
    };
    let mut refine_from: Option<ShapeParam> = Some(best_param.clone());
    if let Some(hint) = options.hessian_hint {
        if let Ok(h) = SpdShape::new(hint.clone()) {
            let star = optimal_shape(&h);
            let lo = (-log_cap * (dim as f64 - 1.0)).exp();
            let hi = log_cap.exp();
            let mut eigs: Vec<f64> = star.eigenvalues().to_vec();
            for _ in 0..8 {
                for l in eigs.iter_mut() {
                    *l = l.clamp(lo, hi);
                }
                let root = crate::linalg::det_root(&eigs);
                for l in eigs.iter_mut() {
                    *l /= root;
                }
            }
            if let Ok(cand) = SpdShape::from_spectrum(&eigs, star.frame()) {
                try_candidate(
                    cand.normalized(),
                    &mut best_value,
                    &mut best_shape,
                    &mut refine_from,
                )?;
            }
        }
    }
    for cand in options.extra_candidates {
        try_candidate(
            cand.clone(),
            &mut best_value,
            &mut best_shape,
            &mut refine_from,
        )?;
    }
    let coarse_value = best_value;

    // refinement around the best grid parameter (candidates that won outright
    // are kept as-is unless the grid point also improves): per coordinate,
    // scan the full feasible range at the other coordinates' current values,
    // then golden-section around the scan winner. The scan step matters when
    // the landscape is flat in one coordinate at the grid optimum (isotropic
    // shapes make every rotation tie), which strands a purely local bracket.
    if let Some(mut param) = refine_from {
        let spacing_t = if grid_t.len() > 1 {
            grid_t[1] - grid_t[0]
        } else {
            0.5
        };
        let mut current = ev.eval(&param.shape())?;
        for _ in 0..budget.refine_sweeps {
            for k in 0..param.coordinates() {
                let is_rotation = k < param.rotation.len();
                let (range_lo, range_hi, scan_points) = if !is_rotation {
                    (-log_cap, log_cap, budget.eig_grid.max(3))
                } else if dim == 2 {
                    (0.0, std::f64::consts::PI, budget.rotations.max(3))
                } else {
                    // Euler offsets around the base frame; the fixed frame set
                    // covers orientation space to within this radius
                    (-0.45, 0.45, 9)
                };
                let eval_at = |v: f64, param: &mut ShapeParam| -> Result<Option<f64>> {
                    param.set(k, v);
                    let shape = param.shape();
                    if !feasible(&shape) {
                        return Ok(None);
                    }
                    ev.eval(&shape).map(Some)
                };

                let mut scan_best = (param.get(k), current);
                for j in 0..scan_points {
                    let v = range_lo
                        + (range_hi - range_lo) * j as f64 / scan_points as f64;
                    if let Some(val) = eval_at(v, &mut param)? {
                        if val < scan_best.1 {
                            scan_best = (v, val);
                        }
                    }
                }
                let center = scan_best.0;
                current = scan_best.1;
                let half = if is_rotation {
                    (range_hi - range_lo) / scan_points as f64
                } else {
                    spacing_t.max((range_hi - range_lo) / scan_points as f64)
                };

                // clip the bracket to the feasible interval around the center
                let mut lo = (center - half).max(range_lo - half);
                let mut hi = (center + half).min(range_hi + half);
                if eval_at(lo, &mut param)?.is_none() {
                    let (mut a, mut b) = (lo, center);
                    for _ in 0..40 {
                        let mid = 0.5 * (a + b);
                        if eval_at(mid, &mut param)?.is_none() {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    lo = b;
                }
                if eval_at(hi, &mut param)?.is_none() {
                    let (mut a, mut b) = (center, hi);
                    for _ in 0..40 {
                        let mid = 0.5 * (a + b);
                        if eval_at(mid, &mut param)?.is_some() {
                            a = mid;
                        } else {
                            b = mid;
                        }
                    }
                    hi = a;
                }
                // golden-section on the clipped interval
                let gr = (5f64.sqrt() - 1.0) / 2.0;
                let (mut a, mut b) = (lo, hi);
                let mut c = b - gr * (b - a);
                let mut d = a + gr * (b - a);
                let mut fc = eval_at(c, &mut param)?.unwrap_or(f64::INFINITY);
                let mut fd = eval_at(d, &mut param)?.unwrap_or(f64::INFINITY);
                for _ in 0..48 {
                    if fc <= fd {
                        b = d;
                        d = c;
                        fd = fc;
                        c = b - gr * (b - a);
                        fc = eval_at(c, &mut param)?.unwrap_or(f64::INFINITY);
                    } else {
                        a = c;
                        c = d;
                        fc = fd;
                        d = a + gr * (b - a);
                        fd = eval_at(d, &mut param)?.unwrap_or(f64::INFINITY);
                    }
                }
                let candidates = [(c, fc), (d, fd), (center, current)];
                let (arg, val) = candidates
                    .iter()
                    .copied()
                    .min_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
                    .expect("nonempty");
                param.set(k, arg);
                current = val;
                if current < best_value {
                    best_value = current;
                    best_shape = param.shape();
                }
            }
        }
    }

    Ok(SearchResult {
        value: best_value,
        lambda_max: best_shape.lambda_max(),
        shape: best_shape,
        evals: ev.evals.get(),
        coarse_value,
    })
}
