//! Optimality checks for weighted l1 pairs and the construction of a strictly
//! complementary pair from `n` auxiliary problems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cone::{self, Backend, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf};
use crate::modeling::{
    build_aux_tj, extract_aux_dual, extract_primal, solve_weighted_l1, DualVars, Instance,
    PrimalTriple,
};

/// Residuals of every line of the optimality system, all nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub stationarity_x: f64,
    pub stationarity_gamma: f64,
    pub stationarity_t: f64,
    pub comp_soc: f64,
    pub comp_ineq: f64,
    pub comp_t_minus_x: f64,
    pub comp_t_plus_x: f64,
    pub comp_t: f64,
    pub feasibility: f64,
    pub max_residual: f64,
    /// Maximum over every line except the gamma line. Misalignment of `lam3` and `gamma`
    /// shrinks only like the square root of the duality gap, so that line is the last to settle.
    pub max_linear_residual: f64,
    /// `gamma = 0`, where the norm has no gradient; the gamma line was not evaluated.
    pub gamma_line_skipped: bool,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn kkt_check(inst: &Instance, w: &[f64], primal: &PrimalTriple, dual: &DualVars) -> KktReport {
    let n = inst.n();
    let PrimalTriple { x, t, gamma } = primal;
    let ax = inst.a().mul_vec(x);
    let bx = inst.bmat().mul_vec(x);
    let eps = inst.eps_noise();
    let gn = norm2(gamma);

    let mut feas = (gn - eps).max(0.0);
    for (k, g) in gamma.iter().enumerate() {
        feas = feas.max((g - (inst.y()[k] - ax[k])).abs());
    }
    for (bi, ci) in bx.iter().zip(inst.b()) {
        feas = feas.max(bi - ci);
    }
    for i in 0..n {
        feas = feas.max(x[i].abs() - t[i]).max(-t[i]);
    }
    feas = feas.max(dual.infeasibility_signs());

    let bt = inst.bmat().tr_mul_vec(&dual.lam2);
    let at = inst.a().tr_mul_vec(&dual.lam3);
    let stationarity_x = max_abs((0..n).map(|i| bt[i] - at[i] + dual.lam4[i] - dual.lam5[i]));
    let stationarity_t =
        max_abs((0..n).map(|i| w[i] - dual.lam4[i] - dual.lam5[i] - dual.lam6[i]));
    let gamma_line_skipped = gn <= 1e-12;
    let stationarity_gamma = if gamma_line_skipped {
        0.0
    } else {
        max_abs(
            gamma
                .iter()
                .zip(&dual.lam3)
                .map(|(g, l3)| dual.lam1 * g / gn - l3),
        )
    };
    let comp_soc = (dual.lam1 * (eps - gn)).abs();
    let slack_b: Vec<f64> = inst.b().iter().zip(&bx).map(|(a, b)| a - b).collect();
    let comp_ineq = dot(&dual.lam2, &slack_b).abs();
    let tmx: Vec<f64> = (0..n).map(|i| t[i] - x[i]).collect();
    let tpx: Vec<f64> = (0..n).map(|i| t[i] + x[i]).collect();
    let comp_t_minus_x = dot(&dual.lam4, &tmx).abs();
    let comp_t_plus_x = dot(&dual.lam5, &tpx).abs();
    let comp_t = dot(&dual.lam6, t).abs();

    let max_linear_residual = [
        stationarity_x,
        stationarity_t,
        comp_soc,
        comp_ineq,
        comp_t_minus_x,
        comp_t_plus_x,
        comp_t,
        feas,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let max_residual = max_linear_residual.max(stationarity_gamma);
    KktReport {
        stationarity_x,
        stationarity_gamma,
        stationarity_t,
        comp_soc,
        comp_ineq,
        comp_t_minus_x,
        comp_t_plus_x,
        comp_t,
        feasibility: feas,
        max_residual,
        max_linear_residual,
        gamma_line_skipped,
    }
}

impl DualVars {
    /// Violation of the sign and cone constraints alone.
    fn infeasibility_signs(&self) -> f64 {
        let mut v = (norm2(&self.lam3) - self.lam1).max(0.0).max(-self.lam1);
        for x in self
            .lam2
            .iter()
            .chain(&self.lam4)
            .chain(&self.lam5)
            .chain(&self.lam6)
        {
            v = v.max(-x);
        }
        v
    }
}

/// Relative cut used to count entries as nonzero.
pub const SUPPORT_THRESHOLD: f64 = 1e-5;

fn support(v: &[f64], threshold: f64) -> Vec<usize> {
    let cut = threshold * norm_inf(v).max(1.0);
    (0..v.len()).filter(|&i| v[i].abs() > cut).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityReport {
    /// `max_i |x_i| (lam6)_i`
    pub gap: f64,
    pub support_x: usize,
    pub support_lam6: usize,
    pub n: usize,
}

impl ComplementarityReport {
    pub fn support_sum(&self) -> usize {
        self.support_x + self.support_lam6
    }

    pub fn within_bound(&self) -> bool {
        self.support_sum() <= self.n
    }
}

pub fn complementarity_gap(x: &[f64], lam6: &[f64]) -> Result<ComplementarityReport> {
    if x.len() != lam6.len() {
        return Err(Error::Dimension(format!(
            "x has length {}, lam6 has length {}",
            x.len(),
            lam6.len()
        )));
    }
    if let Some(v) = lam6.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("lam6 must be nonnegative, found {v}")));
    }
    Ok(ComplementarityReport {
        gap: x.iter().zip(lam6).map(|(a, b)| a.abs() * b).fold(0.0, f64::max),
        support_x: support(x, SUPPORT_THRESHOLD).len(),
        support_lam6: support(lam6, SUPPORT_THRESHOLD).len(),
        n: x.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictPair {
    pub primal: PrimalTriple,
    pub dual: DualVars,
    /// `min_i (t_i + (lam6)_i)`
    pub min_sum: f64,
    pub strict_tol: f64,
    /// indices with `t_i > strict_tol` (0-based)
    pub p_star: Vec<usize>,
    /// indices with `(lam6)_i > strict_tol` (0-based)
    pub q_star: Vec<usize>,
    /// optimal value of the weighted problem
    pub z_star: f64,
    /// `|w't - D(lam)| / (1 + |Z*|)` at the averaged pair
    pub gap: f64,
    /// for each index, whether `t_j` could be made positive on the optimal face
    pub positive_t_case: Vec<bool>,
}

impl StrictPair {
    pub fn is_strict(&self) -> bool {
        self.min_sum > self.strict_tol
    }
}

fn average(v: &[Vec<f64>]) -> Vec<f64> {
    let n = v.len() as f64;
    let mut out = vec![0.0; v.first().map_or(0, |x| x.len())];
    for x in v {
        for (o, a) in out.iter_mut().zip(x) {
            *o += a / n;
        }
    }
    out
}

fn average_duals(ds: &[DualVars]) -> DualVars {
    let pick = |f: fn(&DualVars) -> &Vec<f64>| average(&ds.iter().map(|d| f(d).clone()).collect::<Vec<_>>());
    DualVars {
        lam1: ds.iter().map(|d| d.lam1).sum::<f64>() / ds.len() as f64,
        lam2: pick(|d| &d.lam2),
        lam3: pick(|d| &d.lam3),
        lam4: pick(|d| &d.lam4),
        lam5: pick(|d| &d.lam5),
        lam6: pick(|d| &d.lam6),
    }
}

/// Positivity is judged at `strict_tol`, about `1e-6`, so complementarity products must sit
/// far below its square. Interior-point solves here run at `tol <= 1e-10`.
fn tightened(settings: &SolverSettings) -> SolverSettings {
    let mut s = *settings;
    if s.backend == Backend::InteriorPoint {
        s.tol = s.tol.min(1e-10);
    }
    s
}

/// Builds a strictly complementary optimal pair for weight `w`.
///
/// For each `j` the largest `t_j` over the optimal face is computed. When it is positive
/// the auxiliary primal is kept with a dual of the weighted problem; otherwise the
/// auxiliary dual `(mu, tau)` yields `lam' = mu / tau` with `(lam6')_j = ((mu6)_j + 1) / tau`,
/// paired with the base primal.
/// The `n` primal and `n` dual solutions are averaged.
pub fn strict_pair_construct(
    inst: &Instance,
    w: &[f64],
    settings: &SolverSettings,
) -> Result<StrictPair> {
    let n = inst.n();
    if w.len() != n {
        return Err(Error::Dimension(format!("weight has length {}, expected {n}", w.len())));
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(format!(
            "weights must be positive and finite, entry {i} is {v}"
        )));
    }
    let settings = &tightened(settings);
    let base = solve_weighted_l1(inst, w, settings)?;
    let z_star = base.objective;
    if !(z_star > 0.0 && z_star.is_finite()) {
        return Err(Error::Precondition(format!(
            "optimal value must be positive and finite, got {z_star}"
        )));
    }
    let gn = norm2(&base.primal.gamma);
    if !(gn < inst.eps_noise() - 1e-8) {
        return Err(Error::Precondition(format!(
            "optimal point is not strictly inside the noise ball (||gamma|| = {gn:.3e}, eps = {:.3e})",
            inst.eps_noise()
        )));
    }
    let strict_tol = 1e-6
        * 1f64
            .max(norm_inf(&base.primal.t))
            .max(norm_inf(&base.dual.lam6));
    // the face must stay nonempty despite the solver's error in Z*
    let slack = 2.0 * (z_star - base.dual_objective).abs() + 1e-9 * (1.0 + z_star.abs());
    let z_relaxed = z_star + slack;
    let scale = norm_inf(w);
    let ws: Vec<f64> = w.iter().map(|v| v / scale).collect();

    let per_index: Vec<Result<(PrimalTriple, DualVars, bool)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let prog = build_aux_tj(inst, &ws, z_relaxed / scale, j)?;
            let res = cone::solve(&prog, settings)?.into_checked("auxiliary problem")?;
            // the relaxed face alone lets t_j reach slack / w_j
            let cut = strict_tol.max(10.0 * slack / w[j]);
            if -res.primal_objective > cut {
                return Ok((extract_primal(inst, &res), base.dual.clone(), true));
            }
            let aux = extract_aux_dual(inst, &res)?;
            // multipliers of the scaled row w/scale; tau for w itself is tau'/scale
            let tau = aux.tau / scale;
            if !(tau > 1e-12) {
                return Err(Error::Subproblem(format!(
                    "auxiliary multiplier tau = {tau:e} for index {j}"
                )));
            }
            let mut lam = aux.mu.scaled(1.0 / tau);
            lam.lam6[j] += 1.0 / tau;
            Ok((base.primal.clone(), lam, false))
        })
        .collect();
    let mut primals = Vec::with_capacity(n);
    let mut duals = Vec::with_capacity(n);
    let mut cases = Vec::with_capacity(n);
    for r in per_index {
        let (p, d, c) = r?;
        primals.push(p);
        duals.push(d);
        cases.push(c);
    }
    let primal = PrimalTriple {
        x: average(&primals.iter().map(|p| p.x.clone()).collect::<Vec<_>>()),
        t: average(&primals.iter().map(|p| p.t.clone()).collect::<Vec<_>>()),
        gamma: average(&primals.iter().map(|p| p.gamma.clone()).collect::<Vec<_>>()),
    };
    let dual = average_duals(&duals);
    Ok(assemble(inst, w, primal, dual, strict_tol, z_star, cases))
}

fn assemble(
    inst: &Instance,
    w: &[f64],
    primal: PrimalTriple,
    dual: DualVars,
    strict_tol: f64,
    z_star: f64,
    positive_t_case: Vec<bool>,
) -> StrictPair {
    let n = inst.n();
    let min_sum = (0..n)
        .map(|i| primal.t[i] + dual.lam6[i])
        .fold(f64::INFINITY, f64::min);
    let gap = (dot(w, &primal.t) - dual.objective(inst)).abs() / (1.0 + z_star.abs());
    let p_star = (0..n).filter(|&i| primal.t[i] > strict_tol).collect();
    let q_star = (0..n).filter(|&i| dual.lam6[i] > strict_tol).collect();
    StrictPair {
        primal,
        dual,
        min_sum,
        strict_tol,
        p_star,
        q_star,
        z_star,
        gap,
        positive_t_case,
    }
}

/// The limit point of the interior-point method on the weighted problem. Primal-dual
/// path following ends near the centre of the optimal face, so the pair it returns is
/// strictly complementary whenever one exists. The caller checks `is_strict`.
pub fn strict_pair_central_path(
    inst: &Instance,
    w: &[f64],
    settings: &SolverSettings,
) -> Result<StrictPair> {
    let settings = tightened(&settings.with_backend(Backend::InteriorPoint));
    let base = solve_weighted_l1(inst, w, &settings)?;
    let strict_tol = 1e-6
        * 1f64
            .max(norm_inf(&base.primal.t))
            .max(norm_inf(&base.dual.lam6));
    let cases = base.primal.t.iter().map(|&t| t > strict_tol).collect();
    Ok(assemble(inst, w, base.primal, base.dual, strict_tol, base.objective, cases))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complementarity_examples() {
        let r = complementarity_gap(&[0.0, 0.0, 2.0, 1.0], &[32.27, 31.71, 0.0, 0.0]).unwrap();
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.support_sum(), 4);
        assert!(r.within_bound());
        assert_eq!(complementarity_gap(&[1.0, 2.0], &[0.0, 0.0]).unwrap().gap, 0.0);
        assert_eq!(complementarity_gap(&[1.0, 1.0], &[1.0, 0.0]).unwrap().gap, 1.0);
        assert!(complementarity_gap(&[1.0], &[-1.0]).is_err());
    }

    #[test]
    fn kkt_on_example1_optimum() {
        let inst = Instance::example1();
        let w = [100.0, 100.0, 1.0, 1.0];
        let sol = solve_weighted_l1(&inst, &w, &SolverSettings::default()).unwrap();
        let rep = kkt_check(&inst, &w, &sol.primal, &sol.dual);
        assert!(rep.max_residual <= 1e-5, "{rep:?}");
    }

    #[test]
    fn kkt_detects_suboptimal_point() {
        let inst = Instance::example1();
        let w = [100.0, 100.0, 1.0, 1.0];
        let sol = solve_weighted_l1(&inst, &w, &SolverSettings::default()).unwrap();
        // feasible but not optimal for this weight
        let x = vec![0.5, 0.0, -0.25, 0.0];
        let t = x.iter().map(|v: &f64| v.abs()).collect();
        let gamma = inst
            .y()
            .iter()
            .zip(inst.a().mul_vec(&x))
            .map(|(a, b)| a - b)
            .collect();
        let rep = kkt_check(&inst, &w, &PrimalTriple { x, t, gamma }, &sol.dual);
        assert!(rep.max_residual > 1e-3);
    }

    #[test]
    fn zero_dual_zero_weight() {
        let inst = Instance::example1();
        let x = vec![0.0, 0.0, 2.0, 1.0];
        let p = PrimalTriple {
            t: vec![0.0, 0.0, 2.0, 1.0],
            gamma: vec![0.0; 3],
            x,
        };
        let rep = kkt_check(&inst, &[0.0; 4], &p, &DualVars::zeros(&inst));
        assert_eq!(rep.stationarity_x, 0.0);
        assert_eq!(rep.stationarity_t, 0.0);
        assert!(rep.gamma_line_skipped);
    }

    #[test]
    fn strict_pair_example1_both_backends() {
        let inst = Instance::example1();
        let w = [100.0, 100.0, 1.0, 1.0];
        for s in [
            SolverSettings::default(),
            SolverSettings {
                tol: 1e-6,
                max_iters: 500_000,
                backend: Backend::Admm,
            },
        ] {
            let sp = strict_pair_construct(&inst, &w, &s).unwrap();
            assert!(sp.is_strict(), "{sp:?}");
            assert_eq!(sp.p_star, vec![2, 3]);
            assert_eq!(sp.q_star, vec![0, 1]);
            assert!(sp.gap < 1e-5);
        }
    }

    #[test]
    fn strict_pair_second_weight() {
        let inst = Instance::example1();
        let sp = strict_pair_construct(&inst, &[1.0, 100.0, 1.0, 100.0], &SolverSettings::default())
            .unwrap();
        assert!(sp.is_strict(), "{sp:?}");
        assert!(sp.p_star.contains(&0) && sp.p_star.contains(&2), "{sp:?}");
    }

    #[test]
    fn central_path_pair_agrees() {
        let inst = Instance::example1();
        for w in [[100.0, 100.0, 1.0, 1.0], [1.0, 100.0, 1.0, 100.0]] {
            let s = SolverSettings::default();
            let a = strict_pair_construct(&inst, &w, &s).unwrap();
            let b = strict_pair_central_path(&inst, &w, &s).unwrap();
            assert!(a.is_strict() && b.is_strict());
            assert_eq!(a.p_star, b.p_star);
            assert_eq!(a.q_star, b.q_star);
        }
    }

    #[test]
    fn strict_pair_rejects_zero_weight() {
        let inst = Instance::example1();
        let e = strict_pair_construct(&inst, &[0.0, 1.0, 1.0, 1.0], &SolverSettings::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
    }
}
