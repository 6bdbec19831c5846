//! Dual-density programs: choose `(w, lambda)` with `lambda` dual-feasible for `w` and
//! `lambda6` as dense as possible, in the three relaxed forms.
//!
//! Variables of the cone program are `(w, lam6, q, lam1, lam3, lam2, [psi, v])`. The
//! multipliers `lam4`, `lam5` are eliminated through
//! `lam4 = (w - lam6 + r) / 2`, `lam5 = (w - lam6 - r) / 2` with `r = A'lam3 - B'lam2`.
//! With the fraction merit, `q_i >= eps / (lam6_i + eps)` is a rotated cone
//! `2 q_i (lam6_i + eps) >= 2 eps`, so `n - sum q` is a concave lower model of `Psi` that
//! is tight wherever `q_i` is pushed down.

use serde::{Deserialize, Serialize};

use super::{DualVars, Instance, WeightSetRule, WeightSetVariant};
use crate::cone::{self, Backend, ConeKind, ConeProgram, SolverResult, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, CsrBuilder};
use crate::merit::{merit_gradient, merit_value, surrogate_value, MeritFunction, Surrogate, SurrogateKind};

/// Smallest merit parameter used after the exact solve fails to converge.
pub const EPS_FLOOR: f64 = 1e-8;

/// Default componentwise cap on `w` when no weight set is given.
pub const DEFAULT_W_CAP: f64 = 1e3;

const NONCONIC_ITERS: usize = 20;
const NONCONIC_FEAS_TOL: f64 = 1e-6;
const DAMPING: f64 = 0.5;
const MAX_DAMPINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DensityKind {
    /// `max D + alpha Psi(lam6)  s.t.  D <= 1`
    MeritBonus,
    /// `max D  s.t.  D <= alpha Psi(lam6)`
    MeritBound,
    /// `max D  s.t.  D + f(lam6) <= gamma_bound`
    SurrogateBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub kind: DensityKind,
    pub alpha: f64,
    pub gamma_bound: f64,
    pub sigma1: f64,
    pub merit: MeritFunction,
    pub surrogate: SurrogateKind,
    /// Upper bound on each `w_i` when no weight set is supplied.
    pub w_cap: f64,
}

impl DensityConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            DensityKind::MeritBonus | DensityKind::MeritBound => pos("alpha", self.alpha)?,
            DensityKind::SurrogateBound => {
                pos("gamma_bound", self.gamma_bound)?;
                pos("sigma1", self.sigma1)?;
            }
        }
        pos("w_cap", self.w_cap)
    }

    fn surrogate_fn(&self) -> Result<Surrogate> {
        Surrogate::new(self.surrogate, self.sigma1, self.merit)
    }

    /// Whether the exact cone build applies.
    pub fn exact(&self) -> bool {
        self.merit.soc_exact()
            && (self.kind != DensityKind::SurrogateBound || self.surrogate == SurrogateKind::J3InvPsi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DensityStatus {
    Exact,
    /// exact build, re-solved with the merit parameter raised to [`EPS_FLOOR`]
    ExactFloored,
    Linearized,
}

#[derive(Debug, Clone)]
pub struct DensitySolution {
    pub w: Vec<f64>,
    pub dual: DualVars,
    /// True objective value, with `Psi` evaluated exactly.
    pub objective: f64,
    pub dual_objective: f64,
    pub psi: f64,
    pub status: DensityStatus,
    pub merit_eps: f64,
    pub iterations: usize,
}

/// How the density term enters the program.
enum MeritModel<'a> {
    Exact,
    /// affine model `value + grad'(lam6 - at)` of `Psi` (bonus/bound) or of `f` (surrogate)
    Linear {
        value: f64,
        grad: &'a [f64],
        at: &'a [f64],
    },
}

struct Vars {
    n: usize,
    m: usize,
    l: usize,
    exact: bool,
    kind: DensityKind,
}

impl Vars {
    fn w(&self, i: usize) -> usize {
        i
    }
    fn lam6(&self, i: usize) -> usize {
        self.n + i
    }
    fn q_base(&self) -> usize {
        2 * self.n
    }
    fn q(&self, i: usize) -> usize {
        self.q_base() + i
    }
    fn lam1(&self) -> usize {
        self.q_base() + if self.exact { self.n } else { 0 }
    }
    fn lam3(&self, k: usize) -> usize {
        self.lam1() + 1 + k
    }
    fn lam2(&self, k: usize) -> usize {
        self.lam1() + 1 + self.m + k
    }
    fn psi(&self) -> usize {
        self.lam1() + 1 + self.m + self.l
    }
    fn v(&self) -> usize {
        self.psi() + 1
    }
    fn count(&self) -> usize {
        let extra = if self.exact && self.kind == DensityKind::SurrogateBound {
            2
        } else {
            0
        };
        self.psi() + extra
    }
}

/// `(index, coefficient)` form of `D = -eps lam1 - b'lam2 + y'lam3`.
fn dual_objective_terms(inst: &Instance, v: &Vars) -> Vec<(usize, f64)> {
    let mut d = vec![(v.lam1(), -inst.eps_noise())];
    d.extend(inst.y().iter().enumerate().map(|(k, &yk)| (v.lam3(k), yk)));
    d.extend(inst.b().iter().enumerate().map(|(k, &bk)| (v.lam2(k), -bk)));
    d
}

fn r_terms(inst: &Instance, v: &Vars, i: usize) -> Vec<(usize, f64)> {
    let mut r = Vec::with_capacity(v.m + v.l);
    for k in 0..v.m {
        r.push((v.lam3(k), inst.a().get(k, i)));
    }
    for k in 0..v.l {
        r.push((v.lam2(k), -inst.bmat().get(k, i)));
    }
    r
}

fn build(
    inst: &Instance,
    cfg: &DensityConfig,
    rule: Option<&WeightSetRule>,
    model: &MeritModel,
) -> Result<ConeProgram> {
    cfg.validate()?;
    if let Some(r) = rule {
        r.validate(inst.n())?;
    }
    let exact = matches!(model, MeritModel::Exact);
    if exact && !cfg.exact() {
        return Err(Error::InvalidArgument(
            "exact build needs the fraction merit (and J3 for the surrogate form)".into(),
        ));
    }
    let v = Vars {
        n: inst.n(),
        m: inst.m(),
        l: inst.l(),
        exact,
        kind: cfg.kind,
    };
    let n = v.n;
    let eps = cfg.merit.eps();
    let mut g = CsrBuilder::new(v.count());
    let mut h = Vec::new();
    let d_terms = dual_objective_terms(inst, &v);

    // lam4, lam5 >= 0
    for sign in [1.0, -1.0] {
        for i in 0..n {
            let mut row = vec![(v.w(i), -1.0), (v.lam6(i), 1.0)];
            row.extend(r_terms(inst, &v, i).into_iter().map(|(j, c)| (j, -sign * c)));
            g.push_row(row);
            h.push(0.0);
        }
    }
    for i in 0..n {
        g.push_row([(v.lam6(i), -1.0)]);
        h.push(0.0);
    }
    for k in 0..v.l {
        g.push_row([(v.lam2(k), -1.0)]);
        h.push(0.0);
    }
    let ub = match rule {
        Some(r) => r.upper_bounds(),
        None => vec![cfg.w_cap; n],
    };
    for (i, &u) in ub.iter().enumerate() {
        g.push_row([(v.w(i), 1.0)]);
        h.push(u);
    }
    if let Some(r) = rule.filter(|r| r.variant == WeightSetVariant::Box) {
        g.push_row(r.anchor.iter().enumerate().map(|(i, &a)| (v.w(i), a)));
        h.push(r.m);
    }

    let mut c = vec![0.0; v.count()];
    for &(j, a) in &d_terms {
        c[j] -= a;
    }
    match cfg.kind {
        DensityKind::MeritBonus => {
            g.push_row(d_terms.iter().copied());
            h.push(1.0);
            match model {
                MeritModel::Exact => {
                    for i in 0..n {
                        c[v.q(i)] += cfg.alpha;
                    }
                }
                MeritModel::Linear { grad, .. } => {
                    for i in 0..n {
                        c[v.lam6(i)] -= cfg.alpha * grad[i];
                    }
                }
            }
        }
        DensityKind::MeritBound => {
            // D - alpha * model(Psi) <= 0
            let mut row = d_terms.clone();
            let rhs = match model {
                MeritModel::Exact => {
                    row.extend((0..n).map(|i| (v.q(i), cfg.alpha)));
                    cfg.alpha * n as f64
                }
                MeritModel::Linear { value, grad, at } => {
                    row.extend((0..n).map(|i| (v.lam6(i), -cfg.alpha * grad[i])));
                    cfg.alpha * (value - dot(grad, at))
                }
            };
            g.push_row(row);
            h.push(rhs);
        }
        DensityKind::SurrogateBound => match model {
            MeritModel::Exact => {
                let mut row = d_terms.clone();
                row.push((v.v(), 1.0));
                g.push_row(row);
                h.push(cfg.gamma_bound);
                // psi <= n - sum q
                g.push_row(std::iter::once((v.psi(), 1.0)).chain((0..n).map(|i| (v.q(i), 1.0))));
                h.push(n as f64);
            }
            MeritModel::Linear { value, grad, at } => {
                let mut row = d_terms.clone();
                row.extend((0..n).map(|i| (v.lam6(i), grad[i])));
                g.push_row(row);
                h.push(cfg.gamma_bound - value + dot(grad, at));
            }
        },
    }
    let nonneg = g.nrows();

    g.push_row([(v.lam1(), -1.0)]);
    h.push(0.0);
    for k in 0..v.m {
        g.push_row([(v.lam3(k), -1.0)]);
        h.push(0.0);
    }
    let mut cones = vec![ConeKind::NonNeg(nonneg), ConeKind::Soc(v.m + 1)];

    if exact {
        let u = (2.0 * eps).sqrt();
        for i in 0..n {
            g.push_row([(v.q(i), -1.0)]);
            h.push(0.0);
            g.push_row([(v.lam6(i), -1.0)]);
            h.push(eps);
            g.push_empty_row();
            h.push(u);
            cones.push(ConeKind::Rsoc(3));
        }
        if cfg.kind == DensityKind::SurrogateBound {
            // v (psi + sigma1) >= 1
            g.push_row([(v.v(), -1.0)]);
            h.push(0.0);
            g.push_row([(v.psi(), -1.0)]);
            h.push(cfg.sigma1);
            g.push_empty_row();
            h.push(std::f64::consts::SQRT_2);
            cones.push(ConeKind::Rsoc(3));
        }
    }
    ConeProgram::new(c, g.finish(), h, cones)
}

fn check_kind(cfg: &DensityConfig, allowed: &[DensityKind]) -> Result<()> {
    if allowed.contains(&cfg.kind) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("unexpected density kind {:?}", cfg.kind)))
    }
}

/// Exact cone program of the one-step relaxation, `w` only capped by `cfg.w_cap`.
pub fn build_dda(inst: &Instance, cfg: &DensityConfig) -> Result<ConeProgram> {
    build(inst, cfg, None, &MeritModel::Exact)
}

/// Exact cone program of a reweighting step with `w` restricted to `rule`.
pub fn build_dra_subproblem(
    inst: &Instance,
    rule: &WeightSetRule,
    cfg: &DensityConfig,
) -> Result<ConeProgram> {
    check_kind(
        cfg,
        &[
            DensityKind::MeritBonus,
            DensityKind::MeritBound,
            DensityKind::SurrogateBound,
        ],
    )?;
    build(inst, cfg, Some(rule), &MeritModel::Exact)
}

fn read_iterate(inst: &Instance, exact: bool, kind: DensityKind, z: &[f64]) -> (Vec<f64>, DualVars) {
    let v = Vars {
        n: inst.n(),
        m: inst.m(),
        l: inst.l(),
        exact,
        kind,
    };
    let n = v.n;
    let w: Vec<f64> = (0..n).map(|i| z[v.w(i)].max(0.0)).collect();
    let lam6: Vec<f64> = (0..n).map(|i| z[v.lam6(i)]).collect();
    let lam3: Vec<f64> = (0..v.m).map(|k| z[v.lam3(k)]).collect();
    let lam2: Vec<f64> = (0..v.l).map(|k| z[v.lam2(k)]).collect();
    let at = inst.a().tr_mul_vec(&lam3);
    let bt = inst.bmat().tr_mul_vec(&lam2);
    let mut lam4 = vec![0.0; n];
    let mut lam5 = vec![0.0; n];
    for i in 0..n {
        let r = at[i] - bt[i];
        let s = w[i] - lam6[i];
        lam4[i] = 0.5 * (s + r);
        lam5[i] = 0.5 * (s - r);
    }
    let dual = DualVars {
        lam1: z[v.lam1()],
        lam2,
        lam3,
        lam4,
        lam5,
        lam6,
    };
    (w, dual)
}

fn clamp_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn true_psi(cfg: &DensityConfig, lam6: &[f64]) -> Result<f64> {
    merit_value(&cfg.merit, &clamp_nonneg(lam6))
}

/// True objective of `(w, lam)`.
fn true_objective(inst: &Instance, cfg: &DensityConfig, dual: &DualVars) -> Result<f64> {
    let d = dual.objective(inst);
    Ok(match cfg.kind {
        DensityKind::MeritBonus => d + cfg.alpha * true_psi(cfg, &dual.lam6)?,
        _ => d,
    })
}

/// Violation of the one nonlinear constraint (zero for the bonus form, whose cap is linear).
fn true_violation(inst: &Instance, cfg: &DensityConfig, dual: &DualVars) -> Result<f64> {
    let d = dual.objective(inst);
    Ok(match cfg.kind {
        DensityKind::MeritBonus => (d - 1.0).max(0.0),
        DensityKind::MeritBound => (d - cfg.alpha * true_psi(cfg, &dual.lam6)?).max(0.0),
        DensityKind::SurrogateBound => {
            let f = surrogate_value(&cfg.surrogate_fn()?, &clamp_nonneg(&dual.lam6))?;
            (d + f - cfg.gamma_bound).max(0.0)
        }
    })
}

fn solution(
    inst: &Instance,
    cfg: &DensityConfig,
    w: Vec<f64>,
    dual: DualVars,
    status: DensityStatus,
    iterations: usize,
) -> Result<DensitySolution> {
    Ok(DensitySolution {
        objective: true_objective(inst, cfg, &dual)?,
        dual_objective: dual.objective(inst),
        psi: true_psi(cfg, &dual.lam6)?,
        merit_eps: cfg.merit.eps(),
        w,
        dual,
        status,
        iterations,
    })
}

/// The `q` columns carry a cost of order `alpha`, which can be far below the interior-point
/// tolerance; the reduced system then goes singular along `q` and the method stalls just
/// short of the gap test. Operator splitting does not have that failure mode.
fn solve_with_fallback(prog: &ConeProgram, settings: &SolverSettings) -> Result<SolverResult> {
    let res = cone::solve(prog, settings)?;
    if res.is_optimal() || settings.backend != Backend::InteriorPoint {
        return Ok(res);
    }
    log::debug!("interior-point solve returned {:?}; retrying with ADMM", res.status);
    let alt = cone::solve(prog, &settings.with_backend(Backend::Admm))?;
    Ok(if alt.is_optimal() { alt } else { res })
}

fn solve_exact(
    inst: &Instance,
    cfg: &DensityConfig,
    rule: Option<&WeightSetRule>,
    settings: &SolverSettings,
) -> Result<(SolverResult, DensityConfig, DensityStatus)> {
    let prog = build(inst, cfg, rule, &MeritModel::Exact)?;
    let res = solve_with_fallback(&prog, settings)?;
    if res.is_optimal() {
        return Ok((res, cfg.clone(), DensityStatus::Exact));
    }
    if cfg.merit.eps() >= EPS_FLOOR {
        return Err(Error::Solver {
            status: res.status,
            iterations: res.iterations,
            context: "dual-density program".into(),
        });
    }
    log::warn!(
        "dual-density solve returned {:?}; raising merit eps from {:e} to {:e}",
        res.status,
        cfg.merit.eps(),
        EPS_FLOOR
    );
    let floored = DensityConfig {
        merit: cfg.merit.with_eps(EPS_FLOOR)?,
        ..cfg.clone()
    };
    let prog = build(inst, &floored, rule, &MeritModel::Exact)?;
    let res = solve_with_fallback(&prog, settings)?.into_checked("dual-density program (floored eps)")?;
    Ok((res, floored, DensityStatus::ExactFloored))
}

/// Solves the relaxation, exactly when the merit and surrogate allow it and by
/// [`solve_nonconic`] otherwise.
pub fn solve_density(
    inst: &Instance,
    cfg: &DensityConfig,
    rule: Option<&WeightSetRule>,
    settings: &SolverSettings,
) -> Result<DensitySolution> {
    if !cfg.exact() {
        return solve_nonconic(inst, cfg, rule, settings);
    }
    let (res, used, status) = solve_exact(inst, cfg, rule, settings)?;
    let (w, dual) = read_iterate(inst, true, cfg.kind, &res.primal);
    let mut sol = solution(inst, cfg, w, dual, status, res.iterations)?;
    sol.merit_eps = used.merit.eps();
    Ok(sol)
}

/// A starting point satisfying every constraint: `w = lam6 = tau e`, other multipliers zero.
fn feasible_start(inst: &Instance, cfg: &DensityConfig, rule: Option<&WeightSetRule>) -> (Vec<f64>, DualVars) {
    let n = inst.n();
    let mut tau: f64 = 1.0;
    match rule {
        Some(r) => {
            for u in r.upper_bounds() {
                tau = tau.min(u);
            }
            if r.variant == WeightSetVariant::Box {
                let s: f64 = r.anchor.iter().sum();
                if s > 0.0 {
                    tau = tau.min(r.m / s);
                }
            }
        }
        None => tau = tau.min(cfg.w_cap),
    }
    let w = vec![tau; n];
    let mut dual = DualVars::zeros(inst);
    dual.lam6 = w.clone();
    (w, dual)
}

fn blend(old: &(Vec<f64>, DualVars), new: &(Vec<f64>, DualVars), theta: f64) -> (Vec<f64>, DualVars) {
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| theta * x + (1.0 - theta) * y).collect()
    };
    let (wo, lo) = old;
    let (wn, ln) = new;
    (
        mix(wo, wn),
        DualVars {
            lam1: theta * lo.lam1 + (1.0 - theta) * ln.lam1,
            lam2: mix(&lo.lam2, &ln.lam2),
            lam3: mix(&lo.lam3, &ln.lam3),
            lam4: mix(&lo.lam4, &ln.lam4),
            lam5: mix(&lo.lam5, &ln.lam5),
            lam6: mix(&lo.lam6, &ln.lam6),
        },
    )
}

/// Sequential linearization of the density term, for merits without an exact cone form.
///
/// Each step replaces `Psi` (or `f`) by its tangent at the current `lam6` and solves the
/// resulting program. A step whose point violates the true constraint by more than
/// `1e-6` is pulled back toward the previous iterate with factor 0.5 until it does not.
pub fn solve_nonconic(
    inst: &Instance,
    cfg: &DensityConfig,
    rule: Option<&WeightSetRule>,
    settings: &SolverSettings,
) -> Result<DensitySolution> {
    cfg.validate()?;
    if let Some(r) = rule {
        r.validate(inst.n())?;
    }
    let mut cur = feasible_start(inst, cfg, rule);
    if true_violation(inst, cfg, &cur.1)? > NONCONIC_FEAS_TOL {
        return Err(Error::Subproblem(
            "no feasible starting point for the linearized density program".into(),
        ));
    }
    let surrogate = cfg.surrogate_fn();
    let mut total_iters = 0;
    for _ in 0..NONCONIC_ITERS {
        let at = clamp_nonneg(&cur.1.lam6);
        let (value, grad) = match cfg.kind {
            DensityKind::SurrogateBound => {
                let f = surrogate.as_ref().map_err(|e| Error::InvalidArgument(e.to_string()))?;
                (surrogate_value(f, &at)?, f.gradient(&at)?)
            }
            _ => (merit_value(&cfg.merit, &at)?, merit_gradient(&cfg.merit, &at)?),
        };
        let model = MeritModel::Linear {
            value,
            grad: &grad,
            at: &at,
        };
        let prog = build(inst, cfg, rule, &model)?;
        let res = match cone::solve(&prog, settings) {
            Ok(r) if r.is_optimal() => r,
            _ => break,
        };
        total_iters += res.iterations;
        let mut next = read_iterate(inst, false, cfg.kind, &res.primal);
        let mut damped = 0;
        while true_violation(inst, cfg, &next.1)? > NONCONIC_FEAS_TOL && damped < MAX_DAMPINGS {
            next = blend(&cur, &next, DAMPING);
            damped += 1;
        }
        if true_violation(inst, cfg, &next.1)? > NONCONIC_FEAS_TOL {
            break;
        }
        let step = next
            .1
            .lam6
            .iter()
            .zip(&cur.1.lam6)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let wstep = next.0.iter().zip(&cur.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = 1.0 + norm_inf(&next.1.lam6).max(norm_inf(&next.0));
        cur = next;
        if step.max(wstep) <= 1e-9 * scale {
            break;
        }
    }
    let (w, dual) = cur;
    solution(inst, cfg, w, dual, DensityStatus::Linearized, total_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merit::MeritFamily;

    fn cfg(kind: DensityKind, alpha: f64) -> DensityConfig {
        DensityConfig {
            kind,
            alpha,
            gamma_bound: 1.0,
            sigma1: 0.1,
            merit: MeritFunction::fraction(1e-15).unwrap(),
            surrogate: SurrogateKind::J3InvPsi,
            w_cap: DEFAULT_W_CAP,
        }
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn bonus_form_objective_bounded() {
        let inst = Instance::example1();
        let c = cfg(DensityKind::MeritBonus, 1e-8);
        let sol = solve_density(&inst, &c, None, &settings()).unwrap();
        assert!(sol.objective <= 1.0 + 1e-8 * 4.0 + 1e-6, "{}", sol.objective);
        assert!(sol.dual.infeasibility(&inst, &sol.w) < 1e-5);
        assert!(sol.dual_objective <= 1.0 + 1e-6);
    }

    #[test]
    fn surrogate_form_respects_bound() {
        let inst = Instance::example1();
        let c = cfg(DensityKind::SurrogateBound, 1e-5);
        let sol = solve_density(&inst, &c, None, &settings()).unwrap();
        let f = 1.0 / (sol.psi + 0.1);
        assert!(sol.dual_objective + f <= 1.0 + 1e-6);
        assert!(sol.dual.infeasibility(&inst, &sol.w) < 1e-5);
    }

    #[test]
    fn bound_form_respects_bound() {
        let inst = Instance::example1();
        let c = cfg(DensityKind::MeritBound, 1e-5);
        let sol = solve_density(&inst, &c, None, &settings()).unwrap();
        assert!(sol.dual_objective <= 1e-5 * sol.psi + 1e-6);
    }

    #[test]
    fn inverse_rule_caps_weights() {
        let inst = Instance::example1();
        let rule = WeightSetRule {
            variant: WeightSetVariant::Inverse,
            m: 10.0,
            m_star: f64::INFINITY,
            sigma2: 0.1,
            anchor: vec![0.0; 4],
        };
        let c = cfg(DensityKind::SurrogateBound, 1e-5);
        let sol = solve_density(&inst, &c, Some(&rule), &settings()).unwrap();
        assert!(rule.contains(&sol.w, 1e-6));
        assert!(sol.w.iter().all(|&w| w <= 100.0 + 1e-6));
    }

    #[test]
    fn box_rule_membership() {
        let inst = Instance::example1();
        let rule = WeightSetRule {
            variant: WeightSetVariant::Box,
            m: 10.0,
            m_star: 10.0,
            sigma2: 0.0,
            anchor: vec![0.0, 0.0, 2.0, 1.0],
        };
        let c = cfg(DensityKind::MeritBound, 1e-5);
        let sol = solve_density(&inst, &c, Some(&rule), &settings()).unwrap();
        assert!(rule.contains(&sol.w, 1e-6), "{:?}", sol.w);
    }

    #[test]
    fn exact_and_linearized_agree_for_fraction() {
        let inst = Instance::example1();
        for (kind, alpha) in [
            (DensityKind::MeritBonus, 1e-8),
            (DensityKind::MeritBound, 1e-5),
            (DensityKind::SurrogateBound, 1e-5),
        ] {
            let c = cfg(kind, alpha);
            let a = solve_density(&inst, &c, None, &settings()).unwrap();
            let b = solve_nonconic(&inst, &c, None, &settings()).unwrap();
            assert!((a.objective - b.objective).abs() < 1e-4, "{kind:?}: {} vs {}", a.objective, b.objective);
        }
    }

    #[test]
    fn nonconic_log_merit_is_feasible() {
        let inst = Instance::example1();
        let mut c = cfg(DensityKind::MeritBound, 1e-5);
        c.merit = MeritFunction::new(MeritFamily::Log, 1e-3).unwrap();
        let sol = solve_density(&inst, &c, None, &settings()).unwrap();
        assert_eq!(sol.status, DensityStatus::Linearized);
        assert!(sol.dual.lam6.iter().all(|&v| v >= -1e-9));
        assert!(sol.dual_objective <= 1e-5 * sol.psi + 1e-6);
    }

    #[test]
    fn exact_build_rejects_other_merits() {
        let inst = Instance::example1();
        let mut c = cfg(DensityKind::MeritBonus, 1e-8);
        c.merit = MeritFunction::new(MeritFamily::Arctan, 0.1).unwrap();
        assert!(build_dda(&inst, &c).is_err());
    }
}
