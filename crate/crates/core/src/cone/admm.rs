//! Operator-splitting backend: ADMM on `G x + s = h, s in K` with one factorization of
//! `sigma I + G' R G` per penalty value.

use super::{finish, project_in_place, Certificate, ConeKind, ConeProgram, SolverResult, SolverSettings, SolverStatus};
use crate::linalg::{Cholesky, SymMatrix};

const SIGMA: f64 = 1e-6;
const RELAX: f64 = 1.6;
const RHO0: f64 = 0.1;
const EQ_RHO_SCALE: f64 = 1e3;
const CHECK_EVERY: usize = 25;
const ADAPT_EVERY: usize = 100;
const MAX_REFACTORS: usize = 40;

fn row_rhos(p: &ConeProgram, rho: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.num_rows());
    for k in p.cones() {
        let r = if matches!(k, ConeKind::Zero(_)) {
            EQ_RHO_SCALE * rho
        } else {
            rho
        };
        out.extend(std::iter::repeat_n(r, k.dim()));
    }
    out
}

fn factor(p: &ConeProgram, rhos: &[f64]) -> Option<Cholesky> {
    let n = p.num_vars();
    let mut k = SymMatrix::zeros(n);
    let g = p.g();
    for i in 0..g.nrows() {
        let entries: Vec<(usize, f64)> = g.row(i).collect();
        for (x, &(j1, v1)) in entries.iter().enumerate() {
            let f = rhos[i] * v1;
            for &(j2, v2) in &entries[..=x] {
                k.add(j1, j2, f * v2);
            }
        }
    }
    k.add_diagonal(SIGMA);
    k.cholesky()
}

fn project(p: &ConeProgram, v: &mut [f64]) {
    let mut off = 0;
    for &k in p.cones() {
        let d = k.dim();
        project_in_place(k, &mut v[off..off + d]);
        off += d;
    }
}

pub(super) fn solve(p: &ConeProgram, settings: &SolverSettings) -> SolverResult {
    let n = p.num_vars();
    let m = p.num_rows();
    let g = p.g();
    let h = p.h();
    let c = p.objective();

    let mut rho = RHO0;
    let mut rhos = row_rhos(p, rho);
    let Some(mut chol) = factor(p, &rhos) else {
        return finish(p, SolverStatus::NumericalFailure, vec![0.0; n], vec![0.0; m], vec![0.0; m], 0);
    };
    let mut refactors = 0;

    let mut x = vec![0.0; n];
    let mut s = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut rhs_m = vec![0.0; m];
    let mut s_hat = vec![0.0; m];

    for iter in 1..=settings.max_iters {
        // (x~, s~) = argmin c'x~ + sigma/2 |x~ - x|^2 + 1/2 |h - G x~ - s + y/rho|_R^2
        for i in 0..m {
            rhs_m[i] = rhos[i] * (h[i] - s[i]) + y[i];
        }
        let mut rhs = g.tr_mul_vec(&rhs_m);
        for j in 0..n {
            rhs[j] += SIGMA * x[j] - c[j];
        }
        chol.solve_in_place(&mut rhs);
        let xt = rhs;
        let gx = g.mul_vec(&xt);
        let s_prev = s.clone();
        for i in 0..m {
            let st = h[i] - gx[i];
            s_hat[i] = RELAX * st + (1.0 - RELAX) * s_prev[i];
        }
        for j in 0..n {
            x[j] = RELAX * xt[j] + (1.0 - RELAX) * x[j];
        }
        for i in 0..m {
            s[i] = s_hat[i] + y[i] / rhos[i];
        }
        project(p, &mut s);
        for i in 0..m {
            y[i] += rhos[i] * (s_hat[i] - s[i]);
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return finish(p, SolverStatus::NumericalFailure, vec![0.0; n], vec![0.0; m], vec![0.0; m], iter);
        }

        if iter % CHECK_EVERY == 0 || iter == settings.max_iters {
            let dual: Vec<f64> = y.iter().map(|v| -v).collect();
            let cert = Certificate::compute(p, &x, &s, &dual);
            if cert.converged(settings.tol) {
                return finish(p, SolverStatus::Optimal, x, s, dual, iter);
            }
            if iter % ADAPT_EVERY == 0 && refactors < MAX_REFACTORS {
                let ratio = (cert.pres / cert.dres.max(1e-300)).sqrt();
                if !(0.2..=5.0).contains(&ratio) && ratio.is_finite() {
                    let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                    if new_rho != rho {
                        let new_rhos = row_rhos(p, new_rho);
                        if let Some(ch) = factor(p, &new_rhos) {
                            rho = new_rho;
                            rhos = new_rhos;
                            chol = ch;
                            refactors += 1;
                        }
                    }
                }
            }
        }
    }
    let dual: Vec<f64> = y.iter().map(|v| -v).collect();
    finish(p, SolverStatus::MaxIters, x, s, dual, settings.max_iters)
}
