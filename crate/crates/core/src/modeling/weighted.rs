//! Epigraph form of weighted l1 minimization over `T`, its dual, and the auxiliary
//! programs used to build strictly complementary pairs.
//!
//! Variables are `z = (x, t, gamma)`; rows, in order:
//!
//! | rows        | cone    | meaning                 | dual        |
//! |-------------|---------|-------------------------|-------------|
//! | `m`         | zero    | `A x + gamma = y`       | `-lam3`     |
//! | `l`         | nonneg  | `b - B x >= 0`          | `lam2`      |
//! | `m + 1`     | SOC     | `(eps; gamma)`          | `(lam1; -lam3)` |
//! | `n`         | nonneg  | `t - x >= 0`            | `lam4`      |
//! | `n`         | nonneg  | `t + x >= 0`            | `lam5`      |
//! | `n`         | nonneg  | `t >= 0`                | `lam6`      |
//! | `1` (aux)   | nonneg  | `Z* - w't >= 0`         | `tau`       |

use super::{DualVars, Instance, PrimalTriple, Weight};
use crate::cone::{self, ConeKind, ConeProgram, SolverResult, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, CsrBuilder};

struct Layout {
    n: usize,
    m: usize,
    l: usize,
}

impl Layout {
    fn of(inst: &Instance) -> Self {
        Self {
            n: inst.n(),
            m: inst.m(),
            l: inst.l(),
        }
    }

    fn num_vars(&self) -> usize {
        2 * self.n + self.m
    }

    fn t(&self, i: usize) -> usize {
        self.n + i
    }

    fn gamma(&self, k: usize) -> usize {
        2 * self.n + k
    }

    fn row_b(&self) -> usize {
        self.m
    }

    fn row_soc(&self) -> usize {
        self.m + self.l
    }

    fn row_tm(&self) -> usize {
        self.row_soc() + self.m + 1
    }

    fn row_tp(&self) -> usize {
        self.row_tm() + self.n
    }

    fn row_t(&self) -> usize {
        self.row_tp() + self.n
    }

    fn row_aux(&self) -> usize {
        self.row_t() + self.n
    }
}

fn base_rows(inst: &Instance, lay: &Layout) -> (CsrBuilder, Vec<f64>, Vec<ConeKind>) {
    let (n, m, l) = (lay.n, lay.m, lay.l);
    let mut g = CsrBuilder::new(lay.num_vars());
    let mut h = Vec::new();
    for k in 0..m {
        let row = inst.a().row(k);
        g.push_row(
            row.iter()
                .enumerate()
                .map(|(j, &v)| (j, v))
                .chain(std::iter::once((lay.gamma(k), 1.0))),
        );
        h.push(inst.y()[k]);
    }
    for k in 0..l {
        let row = inst.bmat().row(k);
        g.push_row(row.iter().enumerate().map(|(j, &v)| (j, v)));
        h.push(inst.b()[k]);
    }
    g.push_empty_row();
    h.push(inst.eps_noise());
    for k in 0..m {
        g.push_row([(lay.gamma(k), -1.0)]);
        h.push(0.0);
    }
    for i in 0..n {
        g.push_row([(i, 1.0), (lay.t(i), -1.0)]);
        h.push(0.0);
    }
    for i in 0..n {
        g.push_row([(i, -1.0), (lay.t(i), -1.0)]);
        h.push(0.0);
    }
    for i in 0..n {
        g.push_row([(lay.t(i), -1.0)]);
        h.push(0.0);
    }
    let mut cones = vec![ConeKind::Zero(m)];
    if l > 0 {
        cones.push(ConeKind::NonNeg(l));
    }
    cones.push(ConeKind::Soc(m + 1));
    cones.push(ConeKind::NonNeg(3 * n));
    (g, h, cones)
}

fn check_weight(inst: &Instance, w: &[f64]) -> Result<()> {
    if w.len() != inst.n() {
        return Err(Error::Dimension(format!(
            "weight has length {}, instance has n = {}",
            w.len(),
            inst.n()
        )));
    }
    Weight::new(w.to_vec()).map(|_| ())
}

/// `min w't  s.t.  (x, t, gamma)` in the epigraph description of `T`.
pub fn build_weighted_l1(inst: &Instance, w: &[f64]) -> Result<ConeProgram> {
    check_weight(inst, w)?;
    let lay = Layout::of(inst);
    let (g, h, cones) = base_rows(inst, &lay);
    let mut c = vec![0.0; lay.num_vars()];
    c[lay.n..2 * lay.n].copy_from_slice(w);
    ConeProgram::new(c, g.finish(), h, cones)
}

/// `min -t_j` over the optimal face `{w't <= Z*}` of the weighted problem.
pub fn build_aux_tj(inst: &Instance, w: &[f64], z_star: f64, j: usize) -> Result<ConeProgram> {
    check_weight(inst, w)?;
    if j >= inst.n() {
        return Err(Error::InvalidArgument(format!(
            "index {j} out of range for n = {}",
            inst.n()
        )));
    }
    if !z_star.is_finite() {
        return Err(Error::InvalidArgument(format!("Z* must be finite, got {z_star}")));
    }
    let lay = Layout::of(inst);
    let (mut g, mut h, mut cones) = base_rows(inst, &lay);
    g.push_row((0..lay.n).map(|i| (lay.t(i), w[i])));
    h.push(z_star);
    cones.push(ConeKind::NonNeg(1));
    let mut c = vec![0.0; lay.num_vars()];
    c[lay.t(j)] = -1.0;
    ConeProgram::new(c, g.finish(), h, cones)
}

pub fn extract_primal(inst: &Instance, result: &SolverResult) -> PrimalTriple {
    let lay = Layout::of(inst);
    let z = &result.primal;
    PrimalTriple {
        x: z[..lay.n].to_vec(),
        t: z[lay.n..2 * lay.n].to_vec(),
        gamma: z[2 * lay.n..].to_vec(),
    }
}

fn dual_blocks(inst: &Instance, y: &[f64]) -> DualVars {
    let lay = Layout::of(inst);
    let (n, m, l) = (lay.n, lay.m, lay.l);
    DualVars {
        lam1: y[lay.row_soc()],
        lam2: y[lay.row_b()..lay.row_b() + l].to_vec(),
        lam3: y[..m].iter().map(|v| -v).collect(),
        lam4: y[lay.row_tm()..lay.row_tm() + n].to_vec(),
        lam5: y[lay.row_tp()..lay.row_tp() + n].to_vec(),
        lam6: y[lay.row_t()..lay.row_t() + n].to_vec(),
    }
}

/// Reads the six dual blocks from a solved [`build_weighted_l1`] program.
pub fn extract_dual(inst: &Instance, w: &[f64], result: &SolverResult) -> Result<DualVars> {
    check_weight(inst, w)?;
    if !result.is_optimal() {
        return Err(Error::Solver {
            status: result.status,
            iterations: result.iterations,
            context: "weighted l1 dual extraction".into(),
        });
    }
    Ok(dual_blocks(inst, &result.dual))
}

/// Multipliers `(mu, tau)` of an auxiliary program.
#[derive(Debug, Clone)]
pub struct AuxDual {
    pub mu: DualVars,
    pub tau: f64,
}

pub fn extract_aux_dual(inst: &Instance, result: &SolverResult) -> Result<AuxDual> {
    if !result.is_optimal() {
        return Err(Error::Solver {
            status: result.status,
            iterations: result.iterations,
            context: "auxiliary dual extraction".into(),
        });
    }
    let lay = Layout::of(inst);
    Ok(AuxDual {
        mu: dual_blocks(inst, &result.dual),
        tau: result.dual[lay.row_aux()],
    })
}

#[derive(Debug, Clone)]
pub struct WeightedL1Solution {
    pub primal: PrimalTriple,
    pub dual: DualVars,
    /// `w't` at the returned point
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Solves the weighted problem. Weights are divided by `||w||_inf` before the solve and
/// the multipliers are scaled back, so the returned duals correspond to `w` itself.
pub fn solve_weighted_l1(
    inst: &Instance,
    w: &[f64],
    settings: &SolverSettings,
) -> Result<WeightedL1Solution> {
    check_weight(inst, w)?;
    let scale = norm_inf(w);
    let wn: Vec<f64> = if scale > 0.0 {
        w.iter().map(|v| v / scale).collect()
    } else {
        w.to_vec()
    };
    let prog = build_weighted_l1(inst, &wn)?;
    let res = cone::solve(&prog, settings)?.into_checked("weighted l1")?;
    let primal = extract_primal(inst, &res);
    let mut dual = extract_dual(inst, &wn, &res)?;
    if scale > 0.0 {
        dual = dual.scaled(scale);
    }
    let objective = dot(w, &primal.t);
    let dual_objective = dual.objective(inst);
    Ok(WeightedL1Solution {
        primal,
        dual,
        objective,
        dual_objective,
        iterations: res.iterations,
        primal_residual: res.primal_residual,
        dual_residual: res.dual_residual,
    })
}
