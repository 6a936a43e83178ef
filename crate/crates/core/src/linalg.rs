//! Symmetric matrix calculus in small dimensions (2 <= n <= 8).
//!
//! Everything the averaging operators need from linear algebra lives here:
//! cyclic-Jacobi eigendecomposition, the symmetric polar factor, the closed-form
//! minimizer of the trace objective over det-one shapes, and the eigenvalue
//! cutoff beyond which the bound on the largest eigenvalue stops binding.

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

/// Eigenvalues in `(-PSD_CLAMP, 0)` are treated as zero: floating-point
/// Hessians of convex functions can dip infinitesimally negative.
pub const PSD_CLAMP: f64 = 1e-12;

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

fn check_dim(n: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&n) {
        return Err(Error::InvalidMatrix(format!(
            "dimension {n} outside supported range {MIN_DIM}..={MAX_DIM}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// general square matrices
// ---------------------------------------------------------------------------

/// Dense square matrix, row-major. Used for rotations, frames, and raw inputs
/// to the polar factorization; symmetric data lives in [`SymMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let n = rows.len();
        check_dim(n)?;
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Counterclockwise plane rotation by `theta`.
    pub fn rotation2(theta: f64) -> Matrix {
        let (s, c) = theta.sin_cos();
        Matrix::from_rows(&[vec![c, -s], vec![s, c]]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.set(i, j, out.get(i, j) + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `A A^t`, always symmetric.
    pub fn gram(&self) -> SymMatrix {
        let n = self.n;
        let mut g = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = (0..n).map(|k| self.get(i, k) * self.get(j, k)).sum();
                g.set(i, j, v);
            }
        }
        g
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut lu = self.data.clone();
        let mut sign = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut best = lu[col * n + col].abs();
            for row in (col + 1)..n {
                let v = lu[row * n + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot * n + j);
                }
                sign = -sign;
            }
            let d = lu[col * n + col];
            for row in (col + 1)..n {
                let f = lu[row * n + col] / d;
                lu[row * n + col] = f;
                for j in (col + 1)..n {
                    lu[row * n + j] -= f * lu[col * n + j];
                }
            }
        }
        (0..n).map(|i| lu[i * n + i]).product::<f64>() * sign
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

// ---------------------------------------------------------------------------
// symmetric matrices
// ---------------------------------------------------------------------------

/// Symmetric n x n matrix; the upper triangle is authoritative and the lower
/// triangle mirrors it exactly, so entries are equal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> SymMatrix {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from full rows, rejecting asymmetry beyond roundoff.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
        let m = Matrix::from_rows(rows)?;
        let n = m.dim();
        let scale = m.frobenius().max(1.0);
        let mut s = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let a = m.get(i, j);
                let b = m.get(j, i);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ: {a} vs {b}"
                    )));
                }
                s.set(i, j, 0.5 * (a + b));
            }
        }
        Ok(s)
    }

    /// Rank-one matrix `x x^t`.
    pub fn outer(x: &[f64]) -> SymMatrix {
        let n = x.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, x[i] * x[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn quad_form(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for j in 0..self.n {
                row += self.get(i, j) * y[j];
            }
            acc += y[i] * row;
        }
        acc
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * y[j]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.clone(),
        }
    }

    /// Eigendecomposition by cyclic Jacobi rotations. Returns eigenvalues in
    /// descending order and the orthonormal frame whose columns are the
    /// matching eigenvectors, so `self = Q diag(l) Q^t`.
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.n;
        let norm = self.frobenius();
        let tol = 1e-14 * norm;
        let mut a = self.clone();
        let mut q = Matrix::identity(n);

        let off = |a: &SymMatrix| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += 2.0 * a.get(i, j) * a.get(i, j);
                }
            }
            s.sqrt()
        };

        let mut converged = norm == 0.0 || off(&a) <= tol;
        for _sweep in 0..64 {
            if converged {
                break;
            }
            for p in 0..n - 1 {
                for r in (p + 1)..n {
                    let apr = a.get(p, r);
                    if apr.abs() <= 0.1 * tol / (n * n) as f64 {
                        continue;
                    }
                    let theta = (a.get(r, r) - a.get(p, p)) / (2.0 * apr);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;

                    // rotate rows/columns p and r of a
                    let app = a.get(p, p);
                    let arr = a.get(r, r);
                    a.set(p, p, app - t * apr);
                    a.set(r, r, arr + t * apr);
                    a.set(p, r, 0.0);
                    for k in 0..n {
                        if k == p || k == r {
                            continue;
                        }
                        let akp = a.get(k, p);
                        let akr = a.get(k, r);
                        a.set(k, p, c * akp - s * akr);
                        a.set(k, r, s * akp + c * akr);
                    }
                    // accumulate the frame
                    for k in 0..n {
                        let qkp = q.get(k, p);
                        let qkr = q.get(k, r);
                        q.set(k, p, c * qkp - s * qkr);
                        q.set(k, r, s * qkp + c * qkr);
                    }
                }
            }
            converged = off(&a) <= tol;
        }
        if !converged {
            return Err(Error::EigenNoConvergence);
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a.get(j, j)
                .partial_cmp(&a.get(i, i))
                .expect("finite eigenvalues")
        });
        let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
        let mut frame = Matrix::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            let mut v = q.column(src);
            // deterministic sign: largest-magnitude component is positive
            let lead = (0..n)
                .max_by(|&i, &j| v[i].abs().partial_cmp(&v[j].abs()).expect("finite"))
                .expect("nonempty");
            if v[lead] < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
            for i in 0..n {
                frame.set(i, col, v[i]);
            }
        }
        Ok(Eigen { values, frame })
    }
}

/// Result of [`SymMatrix::eigen`]: `values` descending, `frame` orthonormal
/// with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub frame: Matrix,
}

impl Eigen {
    /// Reassembles `Q diag(f(l)) Q^t`.
    pub fn map_to_sym(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut out = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = (0..n)
                    .map(|k| self.frame.get(i, k) * f(self.values[k]) * self.frame.get(j, k))
                    .sum();
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Geometric mean of the clamped eigenvalues, i.e. `det^(1/n)`.
///
/// Computed as `exp(mean of log eigenvalues)` for stability across widely
/// spread spectra; returns 0 if any eigenvalue clamps to 0.
pub fn det_root(eigenvalues: &[f64]) -> f64 {
    let n = eigenvalues.len() as f64;
    let mut acc = 0.0;
    for &l in eigenvalues {
        let l = if l <= 0.0 { 0.0 } else { l };
        if l == 0.0 {
            return 0.0;
        }
        acc += l.ln();
    }
    (acc / n).exp()
}

// ---------------------------------------------------------------------------
// SPD shapes
// ---------------------------------------------------------------------------

/// Symmetric positive definite matrix with cached spectrum, used both for
/// ellipsoid shapes (where the determinant is normalized to one) and for
/// Hessians of strictly convex functions.
#[derive(Debug, Clone)]
pub struct SpdShape {
    matrix: SymMatrix,
    eigenvalues: Vec<f64>,
    frame: Matrix,
    det_normalized: bool,
}

impl SpdShape {
    /// Wraps a symmetric matrix, rejecting non-positive spectra.
    pub fn new(matrix: SymMatrix) -> Result<SpdShape> {
        let eig = matrix.eigen()?;
        let min = *eig.values.last().expect("nonempty spectrum");
        if min <= 0.0 {
            return Err(Error::NotStrictlyConvex(format!(
                "smallest eigenvalue {min:.3e}"
            )));
        }
        Ok(SpdShape {
            matrix,
            eigenvalues: eig.values,
            frame: eig.frame,
            det_normalized: false,
        })
    }

    pub fn identity(n: usize) -> SpdShape {
        let mut s = SpdShape::new(SymMatrix::identity(n)).expect("identity is SPD");
        s.det_normalized = true;
        s
    }

    /// Builds `Q diag(l) Q^t` from an explicit positive spectrum and frame.
    pub fn from_spectrum(eigenvalues: &[f64], frame: &Matrix) -> Result<SpdShape> {
        if eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(Error::NotStrictlyConvex(
                "explicit spectrum contains a non-positive value".into(),
            ));
        }
        let n = eigenvalues.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = (0..n)
                    .map(|k| frame.get(i, k) * eigenvalues[k] * frame.get(j, k))
                    .sum();
                m.set(i, j, v);
            }
        }
        SpdShape::new(m)
    }

    /// Rescales so the determinant is exactly one and flags the result.
    pub fn normalized(&self) -> SpdShape {
        let root = det_root(&self.eigenvalues);
        let mut s = SpdShape::new(self.matrix.scaled(1.0 / root)).expect("scaling preserves SPD");
        s.det_normalized = true;
        s
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    pub fn det_root(&self) -> f64 {
        det_root(&self.eigenvalues)
    }

    pub fn is_det_normalized(&self) -> bool {
        self.det_normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.matrix.apply(y)
    }

    /// `A^(-1) y` through the spectral factors.
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut coords = vec![0.0; n];
        for k in 0..n {
            let c: f64 = (0..n).map(|i| self.frame.get(i, k) * y[i]).sum();
            coords[k] = c / self.eigenvalues[k];
        }
        (0..n)
            .map(|i| (0..n).map(|k| self.frame.get(i, k) * coords[k]).sum())
            .collect()
    }

    /// Spectral power `A^p`.
    pub fn pow(&self, p: f64) -> SpdShape {
        SpdShape::from_spectrum(
            &self
                .eigenvalues
                .iter()
                .map(|l| l.powf(p))
                .collect::<Vec<_>>(),
            &self.frame,
        )
        .expect("positive spectrum")
    }
}

// ---------------------------------------------------------------------------
// operations
// ---------------------------------------------------------------------------

/// Symmetric factor `S = (A A^t)^(1/2)` of the left polar decomposition
/// `A = S Q`. `S` spans the same ellipsoid as `A` and inherits det A = 1.
pub fn polar_spd(a: &Matrix) -> Result<SpdShape> {
    let det = a.det();
    if (det - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidMatrix(format!(
            "determinant {det} is not 1 within 1e-10"
        )));
    }
    let gram = a.gram();
    let eig = gram.eigen()?;
    if eig.values.iter().any(|&l| l <= 0.0) {
        return Err(Error::InvalidMatrix("singular input".into()));
    }
    let roots: Vec<f64> = eig.values.iter().map(|l| l.sqrt()).collect();
    let mut s = SpdShape::from_spectrum(&roots, &eig.frame)?;
    s.det_normalized = true;
    Ok(s)
}

/// Closed-form minimizer `A* = det(H)^(1/2n) H^(-1/2)` of
/// `trace(A^t H A)` over det-one shapes; `trace(A*^t H A*) = n det(H)^(1/n)`.
pub fn optimal_shape(h: &SpdShape) -> SpdShape {
    // det_root is already det^(1/n)
    let root = h.det_root().sqrt();
    let mut s = SpdShape::from_spectrum(
        &h.eigenvalues()
            .iter()
            .map(|l| root / l.sqrt())
            .collect::<Vec<_>>(),
        h.frame(),
    )
    .expect("positive spectrum");
    s.det_normalized = true;
    s
}

/// Value of `inf over det A = 1 of trace(A^t B A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceInf {
    Finite(f64),
    /// The infimum diverges when B has a negative eigenvalue. Kept as a typed
    /// sentinel so no raw infinity enters later arithmetic.
    NegInfinity,
}

impl TraceInf {
    pub fn finite(self) -> Option<f64> {
        match self {
            TraceInf::Finite(v) => Some(v),
            TraceInf::NegInfinity => None,
        }
    }
}

/// `n det(B)^(1/n)` for positive semidefinite `B` (eigenvalues above
/// `-PSD_CLAMP` clamp to zero), the divergence sentinel otherwise.
pub fn trace_inf(b: &SymMatrix) -> Result<TraceInf> {
    let eig = b.eigen()?;
    let min = *eig.values.last().expect("nonempty");
    if min < -PSD_CLAMP {
        return Ok(TraceInf::NegInfinity);
    }
    let clamped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    Ok(TraceInf::Finite(
        b.dim() as f64 * det_root(&clamped),
    ))
}

/// Eigenvalue cutoff `(trace(H) / lambda_min(H))^(1/2)`: above it, capping the
/// largest eigenvalue of the competing shapes no longer changes the trace
/// infimum.
pub fn theta0(h: &SpdShape) -> f64 {
    (h.trace() / h.lambda_min()).sqrt()
}
