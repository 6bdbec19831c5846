//! Standard-form cone programs
//!
//! ```text
//! minimize    c'z
//! subject to  G z + s = h,   s in K = K_1 x ... x K_p
//! ```
//!
//! with blocks drawn from the zero cone, the nonnegative orthant, the second-order
//! cone `{(t, u) : ||u|| <= t}` and the rotated cone `{(a, b, u) : 2ab >= ||u||^2, a, b >= 0}`.
//! The dual is `maximize -h'y  s.t.  G'y + c = 0, y in K*`.

mod admm;
pub mod algebra;
mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    Zero(usize),
    NonNeg(usize),
    Soc(usize),
    Rsoc(usize),
}

impl ConeKind {
    pub fn dim(&self) -> usize {
        match *self {
            ConeKind::Zero(d) | ConeKind::NonNeg(d) | ConeKind::Soc(d) | ConeKind::Rsoc(d) => d,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    c: Vec<f64>,
    g: CsrMatrix,
    h: Vec<f64>,
    cones: Vec<ConeKind>,
}

impl ConeProgram {
    pub fn new(c: Vec<f64>, g: CsrMatrix, h: Vec<f64>, cones: Vec<ConeKind>) -> Result<Self> {
        if g.ncols() != c.len() {
            return Err(Error::Dimension(format!(
                "G has {} columns but c has length {}",
                g.ncols(),
                c.len()
            )));
        }
        if g.nrows() != h.len() {
            return Err(Error::Dimension(format!(
                "G has {} rows but h has length {}",
                g.nrows(),
                h.len()
            )));
        }
        let total: usize = cones.iter().map(ConeKind::dim).sum();
        if total != h.len() {
            return Err(Error::Dimension(format!(
                "cone dimensions sum to {total}, expected {}",
                h.len()
            )));
        }
        for k in &cones {
            match *k {
                ConeKind::Soc(0) => {
                    return Err(Error::InvalidArgument("SOC block of dimension 0".into()))
                }
                ConeKind::Rsoc(d) if d < 3 => {
                    return Err(Error::InvalidArgument(format!(
                        "rotated SOC block of dimension {d} (< 3)"
                    )))
                }
                _ => {}
            }
        }
        if c.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite program data".into()));
        }
        Ok(Self { c, g, h, cones })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.h.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.c
    }

    pub fn g(&self) -> &CsrMatrix {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn cones(&self) -> &[ConeKind] {
        &self.cones
    }

    /// Row offset of every cone block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cones.len());
        let mut o = 0;
        for k in &self.cones {
            out.push(o);
            o += k.dim();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolverStatus {
    Optimal,
    MaxIters,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Primal-dual interior-point method with Nesterov-Todd scaling.
    #[default]
    InteriorPoint,
    /// Operator splitting (ADMM) with closed-form cone projections.
    Admm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub backend: Backend,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iters: 50_000,
            backend: Backend::InteriorPoint,
        }
    }
}

impl SolverSettings {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub primal: Vec<f64>,
    pub slack: Vec<f64>,
    /// Dual vector over all rows; block `i` occupies `offsets()[i]..` of the program.
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl SolverResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    /// Dual entries of block `block` of `program`.
    pub fn dual_block<'a>(&'a self, program: &ConeProgram, block: usize) -> &'a [f64] {
        let off = program.offsets()[block];
        &self.dual[off..off + program.cones()[block].dim()]
    }

    pub fn into_checked(self, context: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                iterations: self.iterations,
                context: context.to_string(),
            })
        }
    }
}

/// Residuals of a candidate primal-dual point, in the relative form used for stopping.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Certificate {
    pub pcost: f64,
    pub dcost: f64,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
}

impl Certificate {
    pub fn compute(p: &ConeProgram, x: &[f64], s: &[f64], y: &[f64]) -> Self {
        let gx = p.g.mul_vec(x);
        let rp: Vec<f64> = (0..p.h.len()).map(|i| gx[i] + s[i] - p.h[i]).collect();
        let mut rd = p.g.tr_mul_vec(y);
        for (r, c) in rd.iter_mut().zip(&p.c) {
            *r += c;
        }
        let pcost = dot(&p.c, x);
        let dcost = -dot(&p.h, y);
        let comp = dot(s, y).abs();
        let scale = 1.0 + pcost.abs().min(dcost.abs());
        Self {
            pcost,
            dcost,
            pres: norm2(&rp) / (1.0 + norm2(&p.h)),
            dres: norm2(&rd) / (1.0 + norm2(&p.c)),
            gap: comp.max((pcost - dcost).abs()) / scale,
        }
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.pres <= tol && self.dres <= tol && self.gap <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.pcost.is_finite() && self.dcost.is_finite() && self.pres.is_finite() && self.dres.is_finite()
    }
}

pub(crate) fn finish(
    p: &ConeProgram,
    status: SolverStatus,
    x: Vec<f64>,
    s: Vec<f64>,
    y: Vec<f64>,
    iterations: usize,
) -> SolverResult {
    let cert = Certificate::compute(p, &x, &s, &y);
    let status = if status == SolverStatus::Optimal && !cert.is_finite() {
        SolverStatus::NumericalFailure
    } else {
        status
    };
    SolverResult {
        status,
        primal: x,
        slack: s,
        dual: y,
        primal_objective: cert.pcost,
        dual_objective: cert.dcost,
        primal_residual: cert.pres,
        dual_residual: cert.dres,
        gap: cert.gap,
        iterations,
    }
}

/// Solves `p` with the backend chosen in `settings`.
pub fn solve(p: &ConeProgram, settings: &SolverSettings) -> Result<SolverResult> {
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance must be positive, got {}",
            settings.tol
        )));
    }
    if settings.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    Ok(match settings.backend {
        Backend::InteriorPoint => ipm::solve(p, settings),
        Backend::Admm => admm::solve(p, settings),
    })
}

/// Euclidean projection onto a single cone block.
pub fn project_cone(kind: ConeKind, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != kind.dim() {
        return Err(Error::Dimension(format!(
            "vector of length {} for cone block of dimension {}",
            v.len(),
            kind.dim()
        )));
    }
    let mut out = v.to_vec();
    project_in_place(kind, &mut out);
    Ok(out)
}

pub(crate) fn project_in_place(kind: ConeKind, v: &mut [f64]) {
    match kind {
        ConeKind::Zero(_) => v.fill(0.0),
        ConeKind::NonNeg(_) => v.iter_mut().for_each(|x| *x = x.max(0.0)),
        ConeKind::Soc(_) => project_soc(v),
        ConeKind::Rsoc(_) => {
            rsoc_to_soc(v);
            project_soc(v);
            rsoc_to_soc(v);
        }
    }
}

fn project_soc(v: &mut [f64]) {
    let t = v[0];
    let nu = norm2(&v[1..]);
    if nu <= t {
        return;
    }
    if nu <= -t {
        v.fill(0.0);
        return;
    }
    let a = (t + nu) / 2.0;
    v[0] = a;
    let scale = a / nu;
    v[1..].iter_mut().for_each(|x| *x *= scale);
}

/// The orthogonal, self-inverse map between rotated and standard second-order cone
/// coordinates: `(a, b, u) <-> ((a + b)/sqrt 2, (a - b)/sqrt 2, u)`.
pub(crate) fn rsoc_to_soc(v: &mut [f64]) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (v[0], v[1]);
    v[0] = r * (a + b);
    v[1] = r * (a - b);
}
