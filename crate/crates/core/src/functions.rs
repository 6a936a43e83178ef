//! Catalog of exact test functions with closed-form gradients, Hessians,
//! right-hand sides, and natural domains. These are the ground truth every
//! operator and solver benchmark is checked against.

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, KinkSet};
use crate::linalg::{self, Matrix, SymMatrix};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    C2,
    C1,
    Lipschitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Global,
    OnDomain,
}

type Scalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type Hessian = Arc<dyn Fn(&[f64]) -> SymMatrix + Send + Sync>;

/// A function `u` with optional exact derivatives, the right-hand side
/// `f = det D^2 u`, and the domain on which `u` is convex.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub dim: usize,
    pub smoothness: Smoothness,
    pub convexity: Convexity,
    pub domain: ConvexDomain,
    /// Curves where `u` is not twice differentiable (plane entries only).
    pub kinks: Vec<KinkSet>,
    eval: Scalar,
    grad: Option<Vector>,
    hess: Option<Hessian>,
    rhs: Scalar,
    /// Distance-like clearance from the non-smooth set, any dimension.
    kink_distance: Option<Scalar>,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn hess(&self, x: &[f64]) -> Option<SymMatrix> {
        self.hess.as_ref().map(|h| h(x))
    }

    pub fn rhs(&self, x: &[f64]) -> f64 {
        (self.rhs)(x)
    }

    /// Distance from `x` to the nearest kink; infinite for C2 entries.
    pub fn kink_clearance(&self, x: &[f64]) -> f64 {
        self.kink_distance
            .as_ref()
            .map_or(f64::INFINITY, |d| d(x))
    }

    /// `P(x) = c + <b, x> + <M x, x>/2` with `f = det M` clamped at zero.
    pub fn paraboloid(m: SymMatrix, b: Vec<f64>, c: f64) -> Result<TestFunction> {
        let dim = m.dim();
        if b.len() != dim {
            return Err(Error::InvalidConfig(
                "paraboloid linear term has the wrong dimension".into(),
            ));
        }
        let det = m
            .eigen()?
            .values
            .iter()
            .product::<f64>();
        let f = det.max(0.0);
        let m_eval = m.clone();
        let b_eval = b.clone();
        let m_grad = m.clone();
        let b_grad = b;
        let m_hess = m;
        Ok(TestFunction {
            name: "paraboloid".into(),
            dim,
            smoothness: Smoothness::C2,
            convexity: Convexity::Global,
            domain: ConvexDomain::whole_space(),
            kinks: vec![],
            eval: Arc::new(move |x| {
                c + linalg::dot(&b_eval, x) + 0.5 * m_eval.quad_form(x)
            }),
            grad: Some(Arc::new(move |x| {
                linalg::add(&b_grad, &m_grad.apply(x))
            })),
            hess: Some(Arc::new(move |_| m_hess.clone())),
            rhs: Arc::new(move |_| f),
            kink_distance: None,
        })
    }

    /// `|x|^2 / 2 + |x|^4 / 12`, solving the equation with
    /// `f = (1 + |x|^2)(1 + |x|^2 / 3)^(n-1)`.
    pub fn u_plus(dim: usize) -> TestFunction {
        TestFunction {
            name: "u_plus".into(),
            dim,
            smoothness: Smoothness::C2,
            convexity: Convexity::Global,
            domain: ConvexDomain::whole_space(),
            kinks: vec![],
            eval: Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                r2 / 2.0 + r2 * r2 / 12.0
            }),
            grad: Some(Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                linalg::scale(x, 1.0 + r2 / 3.0)
            })),
            hess: Some(Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                SymMatrix::identity(x.len())
                    .scaled(1.0 + r2 / 3.0)
                    .add(&SymMatrix::outer(x).scaled(2.0 / 3.0))
            })),
            rhs: Arc::new(move |x| {
                let r2 = linalg::dot(x, x);
                (1.0 + r2) * (1.0 + r2 / 3.0).powi(dim as i32 - 1)
            }),
            kink_distance: None,
        }
    }

    /// `|x|^2 / 2 - |x|^4 / 12` on the unit ball, where it is convex and
    /// `f = (1 - |x|^2)(1 - |x|^2 / 3)^(n-1)` is non-negative.
    pub fn u_minus(dim: usize) -> TestFunction {
        TestFunction {
            name: "u_minus".into(),
            dim,
            smoothness: Smoothness::C2,
            convexity: Convexity::OnDomain,
            domain: ConvexDomain::disc(vec![0.0; dim], 1.0).expect("unit ball"),
            kinks: vec![],
            eval: Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                r2 / 2.0 - r2 * r2 / 12.0
            }),
            grad: Some(Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                linalg::scale(x, 1.0 - r2 / 3.0)
            })),
            hess: Some(Arc::new(|x| {
                let r2 = linalg::dot(x, x);
                SymMatrix::identity(x.len())
                    .scaled(1.0 - r2 / 3.0)
                    .add(&SymMatrix::outer(x).scaled(-2.0 / 3.0))
            })),
            rhs: Arc::new(move |x| {
                let r2 = linalg::dot(x, x);
                ((1.0 - r2) * (1.0 - r2 / 3.0).powi(dim as i32 - 1)).max(0.0)
            }),
            kink_distance: None,
        }
    }

    /// `(|x| - 1)_+^2 / 2` with `f = (1 - 1/|x|)_+^(n-1)`: convex, C1 but not
    /// C2 across the unit sphere.
    pub fn cone_shell(dim: usize) -> TestFunction {
        let kinks = if dim == 2 {
            vec![KinkSet::Circle {
                center: [0.0, 0.0],
                radius: 1.0,
            }]
        } else {
            vec![]
        };
        TestFunction {
            name: "cone_shell".into(),
            dim,
            smoothness: Smoothness::C1,
            convexity: Convexity::Global,
            domain: ConvexDomain::whole_space(),
            kinks,
            eval: Arc::new(|x| {
                let d = linalg::norm(x) - 1.0;
                if d > 0.0 {
                    0.5 * d * d
                } else {
                    0.0
                }
            }),
            grad: Some(Arc::new(|x| {
                let rho = linalg::norm(x);
                if rho > 1.0 {
                    linalg::scale(x, (rho - 1.0) / rho)
                } else {
                    vec![0.0; x.len()]
                }
            })),
            hess: Some(Arc::new(|x| {
                let n = x.len();
                let rho = linalg::norm(x);
                if rho > 1.0 {
                    // unit radial direction carries eigenvalue 1, the
                    // orthogonal complement carries 1 - 1/rho
                    let hat = linalg::scale(x, 1.0 / rho);
                    let radial = SymMatrix::outer(&hat);
                    let tangential = SymMatrix::identity(n).add(&radial.scaled(-1.0));
                    radial.add(&tangential.scaled(1.0 - 1.0 / rho))
                } else {
                    SymMatrix::zeros(n)
                }
            })),
            rhs: Arc::new(move |x| {
                let rho = linalg::norm(x);
                if rho > 1.0 {
                    (1.0 - 1.0 / rho).powi(dim as i32 - 1)
                } else {
                    0.0
                }
            }),
            kink_distance: Some(Arc::new(|x| (linalg::norm(x) - 1.0).abs())),
        }
    }

    /// `|x_1|^gamma` in the plane, `gamma >= 1`, with `f = 0` and a kink along
    /// the vertical axis.
    pub fn ridge(gamma: f64) -> Result<TestFunction> {
        if gamma < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "ridge exponent {gamma} must be >= 1"
            )));
        }
        let smoothness = if gamma >= 2.0 {
            Smoothness::C2
        } else if gamma > 1.0 {
            Smoothness::C1
        } else {
            Smoothness::Lipschitz
        };
        Ok(TestFunction {
            name: format!("ridge({gamma})"),
            dim: 2,
            smoothness,
            convexity: Convexity::Global,
            domain: ConvexDomain::whole_space(),
            kinks: vec![KinkSet::Line {
                normal: [1.0, 0.0],
                offset: 0.0,
            }],
            eval: Arc::new(move |x| x[0].abs().powf(gamma)),
            grad: Some(Arc::new(move |x| {
                if x[0] == 0.0 {
                    vec![0.0, 0.0]
                } else {
                    vec![gamma * x[0].abs().powf(gamma - 1.0) * x[0].signum(), 0.0]
                }
            })),
            hess: Some(Arc::new(move |x| {
                let second = if x[0] == 0.0 {
                    if gamma == 2.0 {
                        2.0
                    } else {
                        0.0
                    }
                } else {
                    gamma * (gamma - 1.0) * x[0].abs().powf(gamma - 2.0)
                };
                SymMatrix::diag(&[second, 0.0])
            })),
            rhs: Arc::new(|_| 0.0),
            kink_distance: Some(Arc::new(|x| x[0].abs())),
        })
    }

    /// Piecewise function equal to `|x_1|` outside the region `|x_1| < x_2^4`
    /// and `(x_2^8 + x_1^2) / (2 x_2^4)` inside it. Its right-hand side is
    /// `6 (x_2^8 - x_1^2) / x_2^10` inside and zero outside; the inside branch
    /// is unbounded as `x_2 -> 0`, so the horizontal axis is flagged as a kink
    /// and evaluation there always takes the outer branch.
    pub fn example46() -> TestFunction {
        let inner = |x: &[f64]| x[0].abs() < x[1].powi(4);
        TestFunction {
            name: "example46".into(),
            dim: 2,
            smoothness: Smoothness::C1,
            convexity: Convexity::Global,
            domain: ConvexDomain::whole_space(),
            kinks: vec![KinkSet::Line {
                normal: [0.0, 1.0],
                offset: 0.0,
            }],
            eval: Arc::new(move |x| {
                if inner(x) {
                    let q = x[1].powi(4);
                    (q * q + x[0] * x[0]) / (2.0 * q)
                } else {
                    x[0].abs()
                }
            }),
            grad: Some(Arc::new(move |x| {
                if inner(x) {
                    let q = x[1].powi(4);
                    vec![
                        x[0] / q,
                        2.0 * x[1].powi(3) - 2.0 * x[0] * x[0] * x[1].powi(-5),
                    ]
                } else {
                    vec![x[0].signum(), 0.0]
                }
            })),
            hess: Some(Arc::new(move |x| {
                if inner(x) {
                    let mut h = SymMatrix::zeros(2);
                    h.set(0, 0, x[1].powi(-4));
                    h.set(0, 1, -4.0 * x[0] * x[1].powi(-5));
                    h.set(
                        1,
                        1,
                        6.0 * x[1] * x[1] + 10.0 * x[0] * x[0] * x[1].powi(-6),
                    );
                    h
                } else {
                    SymMatrix::zeros(2)
                }
            })),
            rhs: Arc::new(move |x| {
                if inner(x) {
                    6.0 * (x[1].powi(8) - x[0] * x[0]) / x[1].powi(10)
                } else {
                    0.0
                }
            }),
            kink_distance: Some(Arc::new(|x| {
                x[1].abs().min((x[0].abs() - x[1].powi(4)).abs())
            })),
        }
    }

    /// `|x|^2 / 2` with `f = 1`; the solver ground truth.
    pub fn radial_quadratic(dim: usize) -> TestFunction {
        let mut f = TestFunction::paraboloid(SymMatrix::identity(dim), vec![0.0; dim], 0.0)
            .expect("identity paraboloid");
        f.name = "radial_quadratic".into();
        f
    }

    /// All named catalog entries valid in the given dimension.
    pub fn catalog(dim: usize) -> Vec<TestFunction> {
        let mut entries = vec![
            TestFunction::paraboloid(SymMatrix::identity(dim), vec![0.0; dim], 0.0)
                .expect("identity paraboloid"),
            TestFunction::u_plus(dim),
            TestFunction::u_minus(dim),
            TestFunction::cone_shell(dim),
            TestFunction::radial_quadratic(dim),
        ];
        if dim == 2 {
            entries.push(TestFunction::ridge(1.0).expect("gamma 1"));
            entries.push(TestFunction::ridge(2.0).expect("gamma 2"));
            entries.push(TestFunction::example46());
        }
        entries
    }
}

/// CLI-facing description of a catalog function.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl FunctionSpec {
    pub fn named(name: &str) -> FunctionSpec {
        FunctionSpec {
            name: name.into(),
            matrix: None,
            b: None,
            c: None,
            gamma: None,
        }
    }

    pub fn build(&self, dim: usize) -> Result<TestFunction> {
        match self.name.as_str() {
            "paraboloid" => {
                let rows: Vec<Vec<f64>> = self
                    .matrix
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig("paraboloid needs a matrix".into()))?;
                let m = SymMatrix::from_rows(&rows)?;
                let b = self.b.clone().unwrap_or_else(|| vec![0.0; m.dim()]);
                TestFunction::paraboloid(m, b, self.c.unwrap_or(0.0))
            }
            "u_plus" => Ok(TestFunction::u_plus(dim)),
            "u_minus" => Ok(TestFunction::u_minus(dim)),
            "cone_shell" => Ok(TestFunction::cone_shell(dim)),
            "ridge" => TestFunction::ridge(self.gamma.unwrap_or(1.0)),
            "example46" => Ok(TestFunction::example46()),
            "radial_quadratic" => Ok(TestFunction::radial_quadratic(dim)),
            other => Err(Error::InvalidConfig(format!("unknown function '{other}'"))),
        }
    }
}

/// Central finite-difference Hessian with step `h`. The stencil must stay
/// inside the function's domain.
pub fn hess_fd(u: &TestFunction, x: &[f64], h: f64) -> Result<SymMatrix> {
    let n = x.len();
    let probe = |p: &[f64]| -> Result<f64> {
        if !u.domain.contains_point(p) {
            return Err(Error::StencilOutOfDomain { point: p.to_vec() });
        }
        Ok(u.eval(p))
    };
    let mut out = SymMatrix::zeros(n);
    let center = probe(x)?;
    for i in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        out.set(i, i, (probe(&xp)? - 2.0 * center + probe(&xm)?) / (h * h));
        for j in (i + 1)..n {
            let mut pp = x.to_vec();
            let mut pm = x.to_vec();
            let mut mp = x.to_vec();
            let mut mm = x.to_vec();
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp[i] -= h;
            mp[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            let v = (probe(&pp)? - probe(&pm)? - probe(&mp)? + probe(&mm)?) / (4.0 * h * h);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Paraboloid `P(z) = <M (z - x0), z - x0> / 2` with `M` carrying eigenvalue 1
/// along `x0` and `lambda` on the orthogonal complement. It touches the
/// cone-shell function from above at `x0` (with `|x0| = 1`) on the ball of
/// radius `lambda / (1 - lambda)`.
pub fn cone_shell_touching_paraboloid(x0: &[f64], lambda: f64) -> Result<(TestFunction, f64)> {
    let n = x0.len();
    if !(0.0 < lambda && lambda < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda {lambda} must lie in (0, 1)"
        )));
    }
    let rho = linalg::norm(x0);
    if (rho - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig("contact point must lie on the unit sphere".into()));
    }
    // orthonormal frame with first column x0
    let mut frame = Matrix::zeros(n);
    let hat = linalg::scale(x0, 1.0 / rho);
    for i in 0..n {
        frame.set(i, 0, hat[i]);
    }
    // complete by Gram-Schmidt over the axes, skipping the most aligned one
    let lead = (0..n)
        .max_by(|&i, &j| hat[i].abs().partial_cmp(&hat[j].abs()).expect("finite"))
        .expect("nonempty");
    let mut col = 1;
    for axis in 0..n {
        if axis == lead {
            continue;
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for k in 0..col {
            let basis = frame.column(k);
            let proj = linalg::dot(&v, &basis);
            v = linalg::sub(&v, &linalg::scale(&basis, proj));
        }
        let len = linalg::norm(&v);
        for i in 0..n {
            frame.set(i, col, v[i] / len);
        }
        col += 1;
    }
    let mut eigs = vec![lambda; n];
    eigs[0] = 1.0;
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = (0..n)
                .map(|k| frame.get(i, k) * eigs[k] * frame.get(j, k))
                .sum();
            m.set(i, j, v);
        }
    }
    let b = linalg::scale(&m.apply(x0), -1.0);
    let c = 0.5 * m.quad_form(x0);
    let mut p = TestFunction::paraboloid(m, b, c)?;
    p.name = format!("touching(lambda={lambda})");
    Ok((p, lambda / (1.0 - lambda)))
}
