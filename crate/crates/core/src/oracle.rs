//! Exhaustive l0 minimisation for small instances.

use serde::{Deserialize, Serialize};

use crate::cone::{self, ConeKind, ConeProgram, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{norm2, CsrBuilder};
use crate::modeling::Instance;

pub const MAX_ORACLE_N: usize = 20;
/// Slack allowed on the residual ball and on the phase-one violation.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Smallest support size with a feasible point, if one exists within the search limit.
    pub min_card: Option<usize>,
    /// First feasible support of that size in lexicographic order (0-based).
    pub witness: Option<Vec<usize>>,
    /// Every feasible support of the minimal size, in lexicographic order.
    pub minimal_supports: Vec<Vec<usize>>,
    pub supports_checked: usize,
}

/// Smallest violation `s >= 0` with `B_S x <= b + s` for some `x`.
fn phase_one(inst: &Instance, s: &[usize], settings: &SolverSettings) -> Result<f64> {
    let k = s.len();
    let l = inst.l();
    let mut c = vec![0.0; k + 1];
    c[k] = 1.0;
    let mut g = CsrBuilder::new(k + 1);
    let mut h = Vec::with_capacity(l + 1);
    for r in 0..l {
        let row = inst.bmat().row(r);
        g.push_row(s.iter().enumerate().map(|(c, &j)| (c, row[j])).chain([(k, -1.0)]));
        h.push(inst.b()[r]);
    }
    g.push_row([(k, -1.0)]);
    h.push(0.0);
    let prog = ConeProgram::new(c, g.finish(), h, vec![ConeKind::NonNeg(l + 1)])?;
    let res = cone::solve(&prog, settings)?.into_checked("oracle phase one")?;
    Ok(res.primal[k].max(0.0))
}

/// Smallest `||y - A_S x||` subject to `B_S x <= b`.
fn min_residual(inst: &Instance, s: &[usize], settings: &SolverSettings) -> Result<f64> {
    let k = s.len();
    let (m, l) = (inst.m(), inst.l());
    let mut c = vec![0.0; k + 1];
    c[k] = 1.0;
    let mut g = CsrBuilder::new(k + 1);
    let mut h = Vec::with_capacity(1 + m + l);
    g.push_row([(k, -1.0)]);
    h.push(0.0);
    for r in 0..m {
        let row = inst.a().row(r);
        g.push_row(s.iter().enumerate().map(|(c, &j)| (c, row[j])));
        h.push(inst.y()[r]);
    }
    let mut cones = vec![ConeKind::Soc(m + 1)];
    if l > 0 {
        for r in 0..l {
            let row = inst.bmat().row(r);
            g.push_row(s.iter().enumerate().map(|(c, &j)| (c, row[j])));
            h.push(inst.b()[r]);
        }
        cones.push(ConeKind::NonNeg(l));
    }
    let prog = ConeProgram::new(c, g.finish(), h, cones)?;
    let res = cone::solve(&prog, settings)?.into_checked("oracle residual")?;
    Ok(res.primal[k])
}

/// Whether some `x` supported on `s` satisfies both constraint sets.
pub fn support_feasible(inst: &Instance, s: &[usize], settings: &SolverSettings) -> Result<bool> {
    if let Some(&j) = s.iter().find(|&&j| j >= inst.n()) {
        return Err(Error::Dimension(format!("support index {j} out of range")));
    }
    let eps = inst.eps_noise();
    if s.is_empty() {
        return Ok(norm2(inst.y()) <= eps + FEAS_TOL && inst.b().iter().all(|&v| v >= -FEAS_TOL));
    }
    if inst.l() > 0 && phase_one(inst, s, settings)? > FEAS_TOL {
        return Ok(false);
    }
    Ok(min_residual(inst, s, settings)? <= eps + FEAS_TOL)
}

/// Advances `idx` to the next `k`-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
        return false;
    };
    idx[i] += 1;
    for j in i + 1..k {
        idx[j] = idx[j - 1] + 1;
    }
    true
}

/// Enumerates supports by increasing size, lexicographically within each size.
pub fn l0_min(
    inst: &Instance,
    max_card: Option<usize>,
    settings: &SolverSettings,
) -> Result<OracleResult> {
    let n = inst.n();
    if n > MAX_ORACLE_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search needs n <= {MAX_ORACLE_N}, got {n}"
        )));
    }
    let limit = max_card.unwrap_or(n).min(n);
    let mut checked = 0;
    for k in 0..=limit {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut found = Vec::new();
        loop {
            checked += 1;
            if support_feasible(inst, &idx, settings)? {
                found.push(idx.clone());
            }
            if !next_combination(&mut idx, n) {
                break;
            }
        }
        if !found.is_empty() {
            return Ok(OracleResult {
                min_card: Some(k),
                witness: Some(found[0].clone()),
                minimal_supports: found,
                supports_checked: checked,
            });
        }
    }
    Ok(OracleResult {
        min_card: None,
        witness: None,
        minimal_supports: Vec::new(),
        supports_checked: checked,
    })
}
