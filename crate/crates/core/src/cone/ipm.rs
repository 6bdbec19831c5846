//! Primal-dual interior-point method (Mehrotra predictor-corrector, Nesterov-Todd
//! scaling). Zero-cone rows become explicit equalities `A x = b`; rotated cones are
//! rotated into standard second-order cones.

use super::algebra::{soc_det, soc_inv_product, soc_max_step, soc_product, SocScaling};
use super::{finish, rsoc_to_soc, Certificate, ConeKind, ConeProgram, SolverResult, SolverSettings, SolverStatus};
use crate::linalg::{dot, norm2, Cholesky, CsrBuilder, CsrMatrix, SymMatrix};

const MAX_IPM_ITERS: usize = 200;
const STEP_FRACTION: f64 = 0.99;
const REFINE_STEPS: usize = 10;
const CENTER_STEPS: usize = 2;

#[derive(Debug, Clone, Copy)]
enum Block {
    NonNeg { off: usize, dim: usize },
    Soc { off: usize, dim: usize, local: usize },
}

/// Where an original cone block lives in the internal problem.
#[derive(Debug, Clone, Copy)]
enum Placement {
    Eq { off: usize },
    Cone { off: usize, rotated: bool },
}

struct SocLocal {
    cols: Vec<usize>,
    /// dim x cols.len(), row-major
    dense: Vec<f64>,
}

struct Internal {
    n: usize,
    c: Vec<f64>,
    a: CsrMatrix,
    b: Vec<f64>,
    g: CsrMatrix,
    h: Vec<f64>,
    blocks: Vec<Block>,
    soc_local: Vec<SocLocal>,
    placement: Vec<Placement>,
    degree: f64,
    h_norm: f64,
    c_norm: f64,
}

impl Internal {
    fn new(p: &ConeProgram) -> Self {
        let n = p.num_vars();
        let mut a = CsrBuilder::new(n);
        let mut b = Vec::new();
        let mut g = CsrBuilder::new(n);
        let mut h = Vec::new();
        let mut blocks = Vec::new();
        let mut soc_local = Vec::new();
        let mut placement = Vec::new();
        let mut degree = 0.0;
        let gp = p.g();
        let mut row = 0;
        for &kind in p.cones() {
            let dim = kind.dim();
            match kind {
                ConeKind::Zero(_) => {
                    placement.push(Placement::Eq { off: b.len() });
                    for r in row..row + dim {
                        a.push_row(gp.row(r));
                        b.push(p.h()[r]);
                    }
                }
                ConeKind::NonNeg(_) | ConeKind::Soc(1) => {
                    let off = h.len();
                    placement.push(Placement::Cone { off, rotated: false });
                    for r in row..row + dim {
                        g.push_row(gp.row(r));
                        h.push(p.h()[r]);
                    }
                    blocks.push(Block::NonNeg { off, dim });
                    degree += dim as f64;
                }
                ConeKind::Soc(_) | ConeKind::Rsoc(_) => {
                    let rotated = matches!(kind, ConeKind::Rsoc(_));
                    let off = h.len();
                    placement.push(Placement::Cone { off, rotated });
                    let mut rows: Vec<Vec<(usize, f64)>> =
                        (row..row + dim).map(|r| gp.row(r).collect()).collect();
                    let mut hb: Vec<f64> = p.h()[row..row + dim].to_vec();
                    if rotated {
                        let s = std::f64::consts::FRAC_1_SQRT_2;
                        let r0 = std::mem::take(&mut rows[0]);
                        let r1 = std::mem::take(&mut rows[1]);
                        rows[0] = r0
                            .iter()
                            .map(|&(j, v)| (j, s * v))
                            .chain(r1.iter().map(|&(j, v)| (j, s * v)))
                            .collect();
                        rows[1] = r0
                            .iter()
                            .map(|&(j, v)| (j, s * v))
                            .chain(r1.iter().map(|&(j, v)| (j, -s * v)))
                            .collect();
                        rsoc_to_soc(&mut hb);
                    }
                    let mut cols: Vec<usize> = rows.iter().flatten().map(|&(j, _)| j).collect();
                    cols.sort_unstable();
                    cols.dedup();
                    let mut dense = vec![0.0; dim * cols.len()];
                    for (i, r) in rows.iter().enumerate() {
                        for &(j, v) in r {
                            let k = cols.binary_search(&j).unwrap();
                            dense[i * cols.len() + k] += v;
                        }
                    }
                    for r in rows {
                        g.push_row(r);
                    }
                    h.extend_from_slice(&hb);
                    blocks.push(Block::Soc {
                        off,
                        dim,
                        local: soc_local.len(),
                    });
                    soc_local.push(SocLocal { cols, dense });
                    degree += 1.0;
                }
            }
            row += dim;
        }
        let h_all: Vec<f64> = p.h().to_vec();
        Self {
            n,
            c: p.objective().to_vec(),
            a: a.finish(),
            b,
            g: g.finish(),
            h,
            blocks,
            soc_local,
            placement,
            degree: degree.max(1.0),
            h_norm: norm2(&h_all),
            c_norm: norm2(p.objective()),
        }
    }

    fn mk(&self) -> usize {
        self.h.len()
    }

    fn identity_e(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.mk()];
        for blk in &self.blocks {
            match *blk {
                Block::NonNeg { off, dim } => e[off..off + dim].fill(1.0),
                Block::Soc { off, .. } => e[off] = 1.0,
            }
        }
        e
    }

    fn min_eig(&self, u: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for blk in &self.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for v in &u[off..off + dim] {
                        m = m.min(*v);
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let seg = &u[off..off + dim];
                    m = m.min(seg[0] - norm2(&seg[1..]));
                }
            }
        }
        m
    }

    fn max_step(&self, u: &[f64], du: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for blk in &self.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for i in off..off + dim {
                        if du[i] < 0.0 {
                            alpha = alpha.min(-u[i] / du[i]);
                        }
                    }
                }
                Block::Soc { off, dim, .. } => {
                    alpha = soc_max_step(&u[off..off + dim], &du[off..off + dim], alpha);
                }
            }
        }
        alpha
    }

    fn lam_product(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for blk in &self.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for i in off..off + dim {
                        out[i] = u[i] * v[i];
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let r = off..off + dim;
                    soc_product(&u[r.clone()], &v[r.clone()], &mut out[r]);
                }
            }
        }
        out
    }

    fn lam_inv_product(&self, lam: &[f64], d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; d.len()];
        for blk in &self.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for i in off..off + dim {
                        out[i] = d[i] / lam[i];
                    }
                }
                Block::Soc { off, dim, .. } => {
                    let r = off..off + dim;
                    soc_inv_product(&lam[r.clone()], &d[r.clone()], &mut out[r]);
                }
            }
        }
        out
    }
}

struct Scaling {
    /// sqrt(s/z) on nonnegative rows
    d: Vec<f64>,
    soc: Vec<SocScaling>,
}

impl Scaling {
    fn identity(int: &Internal) -> Self {
        let soc = int
            .blocks
            .iter()
            .filter_map(|b| match *b {
                Block::Soc { dim, .. } => {
                    let mut wbar = vec![0.0; dim];
                    wbar[0] = 1.0;
                    Some(SocScaling { eta: 1.0, wbar })
                }
                _ => None,
            })
            .collect();
        Self {
            d: vec![1.0; int.mk()],
            soc,
        }
    }

    fn nesterov_todd(int: &Internal, s: &[f64], z: &[f64]) -> Self {
        let mut d = vec![1.0; int.mk()];
        let mut soc = Vec::new();
        for blk in &int.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for i in off..off + dim {
                        d[i] = (s[i] / z[i]).sqrt();
                    }
                }
                Block::Soc { off, dim, .. } => {
                    soc.push(SocScaling::new(&s[off..off + dim], &z[off..off + dim]));
                }
            }
        }
        Self { d, soc }
    }

    fn apply(&self, int: &Internal, u: &[f64], inverse: bool) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for blk in &int.blocks {
            match *blk {
                Block::NonNeg { off, dim } => {
                    for i in off..off + dim {
                        out[i] = if inverse { u[i] / self.d[i] } else { u[i] * self.d[i] };
                    }
                }
                Block::Soc { off, dim, local } => {
                    let r = off..off + dim;
                    if inverse {
                        self.soc[local].apply_inv(&u[r.clone()], &mut out[r]);
                    } else {
                        self.soc[local].apply(&u[r.clone()], &mut out[r]);
                    }
                }
            }
        }
        out
    }
}

/// Factored reduced KKT system for one scaling.
struct Kkt {
    chol: Cholesky,
    /// K^{-1} A^T, n x p column-major
    ka: Vec<f64>,
    schur: Option<Cholesky>,
}

fn factor(int: &Internal, w: &Scaling, kmat: &mut SymMatrix) -> Option<Kkt> {
    let n = int.n;
    kmat.clear();
    let g = &int.g;
    for blk in &int.blocks {
        match *blk {
            Block::NonNeg { off, dim } => {
                for i in off..off + dim {
                    let sc = 1.0 / (w.d[i] * w.d[i]);
                    let entries: Vec<(usize, f64)> = g.row(i).collect();
                    for (x, &(j1, v1)) in entries.iter().enumerate() {
                        let f = sc * v1;
                        for &(j2, v2) in &entries[..=x] {
                            kmat.add(j1, j2, f * v2);
                        }
                    }
                }
            }
            Block::Soc { dim, local, .. } => {
                let loc = &int.soc_local[local];
                let k = loc.cols.len();
                if k == 0 {
                    continue;
                }
                // M = W^{-1} G_b, column by column
                let mut m = vec![0.0; dim * k];
                let mut col = vec![0.0; dim];
                let mut out = vec![0.0; dim];
                for jj in 0..k {
                    for r in 0..dim {
                        col[r] = loc.dense[r * k + jj];
                    }
                    w.soc[local].apply_inv(&col, &mut out);
                    for r in 0..dim {
                        m[r * k + jj] = out[r];
                    }
                }
                for a in 0..k {
                    for bb in 0..=a {
                        let mut acc = 0.0;
                        for r in 0..dim {
                            acc += m[r * k + a] * m[r * k + bb];
                        }
                        if acc != 0.0 {
                            kmat.add(loc.cols[a], loc.cols[bb], acc);
                        }
                    }
                }
            }
        }
    }
    for i in 0..int.a.nrows() {
        let entries: Vec<(usize, f64)> = int.a.row(i).collect();
        for (x, &(j1, v1)) in entries.iter().enumerate() {
            for &(j2, v2) in &entries[..=x] {
                kmat.add(j1, j2, v1 * v2);
            }
        }
    }
    let base = kmat.max_diagonal().max(1.0);
    let mut delta = 1e-15 * base;
    let chol = loop {
        kmat.add_diagonal(delta);
        if let Some(ch) = kmat.cholesky() {
            break ch;
        }
        if delta > 1e-4 * base {
            return None;
        }
        delta *= 100.0;
    };
    let p = int.a.nrows();
    let mut ka = vec![0.0; n * p];
    for i in 0..p {
        for (j, v) in int.a.row(i) {
            ka[i * n + j] = v;
        }
    }
    let schur = if p > 0 {
        chol.solve_many_in_place(&mut ka, p);
        let mut s = SymMatrix::zeros(p);
        for i in 0..p {
            for j in 0..=i {
                let col = &ka[j * n..(j + 1) * n];
                let v: f64 = int.a.row(i).map(|(c, a)| a * col[c]).sum();
                s.add(i, j, v);
            }
        }
        let sb = s.max_diagonal().max(1e-300);
        let mut sd = 1e-13 * sb;
        loop {
            s.add_diagonal(sd);
            if let Some(ch) = s.cholesky() {
                break Some(ch);
            }
            if sd > 1e-4 * sb {
                return None;
            }
            sd *= 100.0;
        }
    } else {
        None
    };
    Some(Kkt { chol, ka, schur })
}

/// Solves
/// ```text
/// A'dy + G'dz      = rx
/// A dx             = ry
/// G dx - W^2 dz    = rz
/// ```
fn kkt_solve_once(
    int: &Internal,
    w: &Scaling,
    kkt: &Kkt,
    rx: &[f64],
    ry: &[f64],
    rz: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = int.n;
    let p = int.a.nrows();
    let t = w.apply(int, &w.apply(int, rz, true), true);
    let mut rhs = int.g.tr_mul_vec(&t);
    for i in 0..n {
        rhs[i] += rx[i];
    }
    if p > 0 {
        let aty = int.a.tr_mul_vec(ry);
        for i in 0..n {
            rhs[i] += aty[i];
        }
    }
    let u = kkt.chol.solve(&rhs);
    let (dx, dy) = if let Some(schur) = &kkt.schur {
        let au = int.a.mul_vec(&u);
        let r: Vec<f64> = (0..p).map(|i| au[i] - ry[i]).collect();
        let dy = schur.solve(&r);
        let mut dx = u;
        for (j, dyj) in dy.iter().enumerate() {
            let col = &kkt.ka[j * n..(j + 1) * n];
            for i in 0..n {
                dx[i] -= col[i] * dyj;
            }
        }
        (dx, dy)
    } else {
        (u, Vec::new())
    };
    let gdx = int.g.mul_vec(&dx);
    let diff: Vec<f64> = gdx.iter().zip(rz).map(|(a, b)| a - b).collect();
    let dz = w.apply(int, &w.apply(int, &diff, true), true);
    (dx, dy, dz)
}

fn kkt_solve(
    int: &Internal,
    w: &Scaling,
    kkt: &Kkt,
    rx: &[f64],
    ry: &[f64],
    rz: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut dx, mut dy, mut dz) = kkt_solve_once(int, w, kkt, rx, ry, rz);
    let scale = 1.0 + norm2(rx) + norm2(ry) + norm2(rz);
    for _ in 0..REFINE_STEPS {
        let mut e1 = int.g.tr_mul_vec(&dz);
        if !dy.is_empty() {
            let aty = int.a.tr_mul_vec(&dy);
            for i in 0..e1.len() {
                e1[i] += aty[i];
            }
        }
        for i in 0..e1.len() {
            e1[i] = rx[i] - e1[i];
        }
        let adx = int.a.mul_vec(&dx);
        let e2: Vec<f64> = (0..ry.len()).map(|i| ry[i] - adx[i]).collect();
        let gdx = int.g.mul_vec(&dx);
        let w2dz = w.apply(int, &w.apply(int, &dz, false), false);
        let e3: Vec<f64> = (0..rz.len()).map(|i| rz[i] - (gdx[i] - w2dz[i])).collect();
        let err = norm2(&e1) + norm2(&e2) + norm2(&e3);
        if !(err > 1e-15 * scale) {
            break;
        }
        let (cx, cy, cz) = kkt_solve_once(int, w, kkt, &e1, &e2, &e3);
        for i in 0..dx.len() {
            dx[i] += cx[i];
        }
        for i in 0..dy.len() {
            dy[i] += cy[i];
        }
        for i in 0..dz.len() {
            dz[i] += cz[i];
        }
    }
    (dx, dy, dz)
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    dz: Vec<f64>,
    ds: Vec<f64>,
}

/// Newton step for `G dx + ds = bz`, `W dz + W^{-1} ds = d` plus the dual rows.
fn newton(
    int: &Internal,
    w: &Scaling,
    kkt: &Kkt,
    bx: &[f64],
    by: &[f64],
    bz: &[f64],
    d: &[f64],
) -> Direction {
    let wd = w.apply(int, d, false);
    let rz: Vec<f64> = (0..bz.len()).map(|i| bz[i] - wd[i]).collect();
    let (dx, dy, dz) = kkt_solve(int, w, kkt, bx, by, &rz);
    let wdz = w.apply(int, &dz, false);
    let inner: Vec<f64> = (0..d.len()).map(|i| d[i] - wdz[i]).collect();
    let ds = w.apply(int, &inner, false);
    Direction { dx, dy, dz, ds }
}

#[derive(Clone)]
struct State {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
}

impl Internal {
    fn residuals(&self, st: &State) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rx = self.g.tr_mul_vec(&st.z);
        if !st.y.is_empty() {
            let aty = self.a.tr_mul_vec(&st.y);
            for i in 0..rx.len() {
                rx[i] += aty[i];
            }
        }
        for i in 0..rx.len() {
            rx[i] += self.c[i];
        }
        let ax = self.a.mul_vec(&st.x);
        let ry: Vec<f64> = (0..self.b.len()).map(|i| ax[i] - self.b[i]).collect();
        let gx = self.g.mul_vec(&st.x);
        let rz: Vec<f64> = (0..self.h.len())
            .map(|i| gx[i] + st.s[i] - self.h[i])
            .collect();
        (rx, ry, rz)
    }

    fn certificate(&self, st: &State, rx: &[f64], ry: &[f64], rz: &[f64]) -> Certificate {
        let pcost = dot(&self.c, &st.x);
        let dcost = -dot(&self.b, &st.y) - dot(&self.h, &st.z);
        let comp = dot(&st.s, &st.z).abs();
        let pres = (dot(ry, ry) + dot(rz, rz)).sqrt() / (1.0 + self.h_norm);
        Certificate {
            pcost,
            dcost,
            pres,
            dres: norm2(rx) / (1.0 + self.c_norm),
            gap: comp.max((pcost - dcost).abs()) / (1.0 + pcost.abs().min(dcost.abs())),
        }
    }

    /// Maps an internal iterate back to the caller's row order and cone coordinates.
    fn to_original(&self, p: &ConeProgram, st: &State) -> (Vec<f64>, Vec<f64>) {
        let mut s = vec![0.0; p.num_rows()];
        let mut y = vec![0.0; p.num_rows()];
        let mut row = 0;
        for (kind, place) in p.cones().iter().zip(&self.placement) {
            let dim = kind.dim();
            match *place {
                Placement::Eq { off } => {
                    y[row..row + dim].copy_from_slice(&st.y[off..off + dim]);
                }
                Placement::Cone { off, rotated } => {
                    s[row..row + dim].copy_from_slice(&st.s[off..off + dim]);
                    y[row..row + dim].copy_from_slice(&st.z[off..off + dim]);
                    if rotated {
                        rsoc_to_soc(&mut s[row..row + dim]);
                        rsoc_to_soc(&mut y[row..row + dim]);
                    }
                }
            }
            row += dim;
        }
        (s, y)
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub(super) fn solve(p: &ConeProgram, settings: &SolverSettings) -> SolverResult {
    let int = Internal::new(p);
    let n = int.n;
    let mk = int.mk();
    let max_iters = settings.max_iters.min(MAX_IPM_ITERS);
    let mut kmat = SymMatrix::zeros(n);
    let e = int.identity_e();

    let fail = |x: Vec<f64>, iters: usize| {
        finish(
            p,
            SolverStatus::NumericalFailure,
            x,
            vec![0.0; p.num_rows()],
            vec![0.0; p.num_rows()],
            iters,
        )
    };

    // Starting point from two least-squares style solves with W = I.
    let ident = Scaling::identity(&int);
    let Some(kkt0) = factor(&int, &ident, &mut kmat) else {
        return fail(vec![0.0; n], 0);
    };
    let zeros_n = vec![0.0; n];
    let zeros_p = vec![0.0; int.b.len()];
    let (x0, _, zp) = kkt_solve(&int, &ident, &kkt0, &zeros_n, &int.b, &int.h);
    let mut s0: Vec<f64> = zp.iter().map(|v| -v).collect();
    let neg_c: Vec<f64> = int.c.iter().map(|v| -v).collect();
    let (_, y0, mut z0) = kkt_solve(&int, &ident, &kkt0, &neg_c, &zeros_p, &vec![0.0; mk]);
    for v in [&mut s0, &mut z0] {
        let me = int.min_eig(v);
        let nrm = norm2(v);
        if mk > 0 && me <= 1e-8 * nrm.max(1.0) {
            let shift = 1.0 - me;
            for i in 0..mk {
                v[i] += shift * e[i];
            }
        }
    }
    let mut st = State {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
    };
    if !(all_finite(&st.x) && all_finite(&st.s) && all_finite(&st.z)) {
        return fail(vec![0.0; n], 0);
    }

    let mut tiny_steps = 0;
    for iter in 0..max_iters {
        let (rx, ry, rz) = int.residuals(&st);
        let cert = int.certificate(&st, &rx, &ry, &rz);
        if !cert.is_finite() {
            return fail(st.x, iter);
        }
        if cert.converged(settings.tol) {
            let (s, y) = int.to_original(p, &st);
            let orig = Certificate::compute(p, &st.x, &s, &y);
            if orig.converged(settings.tol) {
                let st = recenter(p, &int, st, &e, &mut kmat, settings.tol);
                let (s, y) = int.to_original(p, &st);
                return finish(p, SolverStatus::Optimal, st.x, s, y, iter);
            }
        }
        if mk == 0 {
            // Pure equality-constrained LP: only feasible point matters.
            let (s, y) = int.to_original(p, &st);
            let status = if cert.converged(settings.tol) {
                SolverStatus::Optimal
            } else {
                SolverStatus::MaxIters
            };
            return finish(p, status, st.x, s, y, iter);
        }

        let w = Scaling::nesterov_todd(&int, &st.s, &st.z);
        let lam = w.apply(&int, &st.z, false);
        let Some(kkt) = factor(&int, &w, &mut kmat) else {
            return fail(st.x, iter);
        };
        let bx: Vec<f64> = rx.iter().map(|v| -v).collect();
        let by: Vec<f64> = ry.iter().map(|v| -v).collect();
        let bz: Vec<f64> = rz.iter().map(|v| -v).collect();

        let d_aff: Vec<f64> = lam.iter().map(|v| -v).collect();
        let aff = newton(&int, &w, &kkt, &bx, &by, &bz, &d_aff);
        let alpha_aff = int
            .max_step(&st.s, &aff.ds)
            .min(int.max_step(&st.z, &aff.dz))
            .min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);
        let mu = dot(&st.s, &st.z) / int.degree;

        let ws = w.apply(&int, &aff.ds, true);
        let wz = w.apply(&int, &aff.dz, false);
        let corr = int.lam_product(&ws, &wz);
        let ll = int.lam_product(&lam, &lam);
        let bs: Vec<f64> = (0..mk)
            .map(|i| -ll[i] - corr[i] + sigma * mu * e[i])
            .collect();
        let d = int.lam_inv_product(&lam, &bs);
        let dir = newton(&int, &w, &kkt, &bx, &by, &bz, &d);

        let amax = int.max_step(&st.s, &dir.ds).min(int.max_step(&st.z, &dir.dz));
        let alpha = (STEP_FRACTION * amax).min(1.0);
        log::trace!(
            "ipm {iter}: pres {:.2e} dres {:.2e} gap {:.2e} pcost {:.6e} step {:.2e} mu {:.2e}",
            cert.pres,
            cert.dres,
            cert.gap,
            cert.pcost,
            alpha,
            mu
        );
        if !(alpha.is_finite()) {
            return fail(st.x, iter);
        }
        for i in 0..n {
            st.x[i] += alpha * dir.dx[i];
        }
        for i in 0..st.y.len() {
            st.y[i] += alpha * dir.dy[i];
        }
        for i in 0..mk {
            st.s[i] += alpha * dir.ds[i];
            st.z[i] += alpha * dir.dz[i];
        }
        if !(all_finite(&st.x) && all_finite(&st.s) && all_finite(&st.z) && all_finite(&st.y)) {
            return fail(vec![0.0; n], iter + 1);
        }
        // Guard against iterates drifting onto the boundary through rounding.
        if int.min_eig(&st.s) <= 0.0 || int.min_eig(&st.z) <= 0.0 || soc_blocks_degenerate(&int, &st) {
            let (s, y) = int.to_original(p, &st);
            return finish(p, SolverStatus::MaxIters, st.x, s, y, iter + 1);
        }
        if alpha < 1e-10 {
            tiny_steps += 1;
            if tiny_steps >= 3 {
                let (s, y) = int.to_original(p, &st);
                return finish(p, SolverStatus::MaxIters, st.x, s, y, iter + 1);
            }
        } else {
            tiny_steps = 0;
        }
    }
    let (rx, ry, rz) = int.residuals(&st);
    let cert = int.certificate(&st, &rx, &ry, &rz);
    let (s, y) = int.to_original(p, &st);
    let status = if cert.converged(settings.tol) && Certificate::compute(p, &st.x, &s, &y).converged(settings.tol) {
        SolverStatus::Optimal
    } else {
        SolverStatus::MaxIters
    };
    finish(p, status, st.x, s, y, max_iters)
}

/// Pure centering steps at the final `mu`. Mehrotra steps leave the last iterate off the
/// central path, which shows up as misaligned `s` and `z` in second-order blocks. A step is
/// kept only while the iterate still certifies at `tol`.
fn recenter(
    p: &ConeProgram,
    int: &Internal,
    mut st: State,
    e: &[f64],
    kmat: &mut SymMatrix,
    tol: f64,
) -> State {
    let mk = int.mk();
    for _ in 0..CENTER_STEPS {
        let (rx, ry, rz) = int.residuals(&st);
        let w = Scaling::nesterov_todd(int, &st.s, &st.z);
        let lam = w.apply(int, &st.z, false);
        let Some(kkt) = factor(int, &w, kmat) else {
            break;
        };
        let mu = dot(&st.s, &st.z) / int.degree;
        let ll = int.lam_product(&lam, &lam);
        let bs: Vec<f64> = (0..mk).map(|i| -ll[i] + mu * e[i]).collect();
        let d = int.lam_inv_product(&lam, &bs);
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let dir = newton(int, &w, &kkt, &neg(&rx), &neg(&ry), &neg(&rz), &d);
        let amax = int.max_step(&st.s, &dir.ds).min(int.max_step(&st.z, &dir.dz));
        let alpha = (STEP_FRACTION * amax).min(1.0);
        if !(alpha > 0.0) {
            break;
        }
        let mut next = st.clone();
        for i in 0..next.x.len() {
            next.x[i] += alpha * dir.dx[i];
        }
        for i in 0..next.y.len() {
            next.y[i] += alpha * dir.dy[i];
        }
        for i in 0..mk {
            next.s[i] += alpha * dir.ds[i];
            next.z[i] += alpha * dir.dz[i];
        }
        if !(all_finite(&next.x) && all_finite(&next.s) && all_finite(&next.z) && all_finite(&next.y))
            || int.min_eig(&next.s) <= 0.0
            || int.min_eig(&next.z) <= 0.0
            || soc_blocks_degenerate(int, &next)
        {
            break;
        }
        let (rx, ry, rz) = int.residuals(&next);
        if !int.certificate(&next, &rx, &ry, &rz).converged(tol) {
            break;
        }
        let (s, y) = int.to_original(p, &next);
        if !Certificate::compute(p, &next.x, &s, &y).converged(tol) {
            break;
        }
        st = next;
    }
    st
}

fn soc_blocks_degenerate(int: &Internal, st: &State) -> bool {
    int.blocks.iter().any(|b| match *b {
        Block::Soc { off, dim, .. } => {
            soc_det(&st.s[off..off + dim]) <= 0.0 || soc_det(&st.z[off..off + dim]) <= 0.0
        }
        _ => false,
    })
}
