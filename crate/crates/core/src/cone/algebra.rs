//! Jordan-algebra helpers and Nesterov-Todd scaling for the nonnegative orthant and
//! the second-order cone.

use crate::linalg::{dot, norm2};

/// `s0 - ||s1||` for a second-order cone vector; negative outside the cone.
pub fn soc_residual(u: &[f64]) -> f64 {
    u[0] - norm2(&u[1..])
}

/// `u' J u = u0^2 - ||u1||^2`, computed to limit cancellation.
pub fn soc_det(u: &[f64]) -> f64 {
    let n1 = norm2(&u[1..]);
    (u[0] - n1) * (u[0] + n1)
}

/// Jordan product for a second-order cone block.
pub fn soc_product(u: &[f64], v: &[f64], out: &mut [f64]) {
    out[0] = dot(u, v);
    for i in 1..u.len() {
        out[i] = u[0] * v[i] + v[0] * u[i];
    }
}

/// Solves `lambda o x = d` for a second-order cone block.
pub fn soc_inv_product(lambda: &[f64], d: &[f64], out: &mut [f64]) {
    let l0 = lambda[0];
    let det = soc_det(lambda);
    let x0 = (l0 * d[0] - dot(&lambda[1..], &d[1..])) / det;
    out[0] = x0;
    for i in 1..lambda.len() {
        out[i] = (d[i] - x0 * lambda[i]) / l0;
    }
}

/// Nesterov-Todd scaling `W = eta * Wbar` of one second-order cone block,
/// with `W z = W^{-1} s = lambda`.
#[derive(Debug, Clone)]
pub struct SocScaling {
    pub eta: f64,
    pub wbar: Vec<f64>,
}

impl SocScaling {
    pub fn new(s: &[f64], z: &[f64]) -> Self {
        let sdet = soc_det(s).max(f64::MIN_POSITIVE);
        let zdet = soc_det(z).max(f64::MIN_POSITIVE);
        let sn = sdet.sqrt();
        let zn = zdet.sqrt();
        let sbar: Vec<f64> = s.iter().map(|v| v / sn).collect();
        let zbar: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let gamma = ((1.0 + dot(&sbar, &zbar)) / 2.0).sqrt();
        let mut wbar = vec![0.0; s.len()];
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
        for i in 1..s.len() {
            wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
        }
        let eta = (sdet / zdet).sqrt().sqrt();
        Self { eta, wbar }
    }

    fn apply_bar(&self, u: &[f64], out: &mut [f64], inverse: bool) {
        let w0 = self.wbar[0];
        let w1 = &self.wbar[1..];
        let sign = if inverse { -1.0 } else { 1.0 };
        let wu = dot(w1, &u[1..]);
        out[0] = w0 * u[0] + sign * wu;
        let coef = sign * u[0] + wu / (1.0 + w0);
        for i in 1..u.len() {
            out[i] = u[i] + coef * self.wbar[i];
        }
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.apply_bar(u, out, false);
        out.iter_mut().for_each(|v| *v *= self.eta);
    }

    pub fn apply_inv(&self, u: &[f64], out: &mut [f64]) {
        self.apply_bar(u, out, true);
        out.iter_mut().for_each(|v| *v /= self.eta);
    }
}

/// Largest `alpha <= cap` with `x + alpha * dx` in the second-order cone, for `x` interior.
pub fn soc_max_step(x: &[f64], dx: &[f64], cap: f64) -> f64 {
    // Normalize by x so the interior point maps to a unit-determinant vector.
    let xdet = soc_det(x);
    if xdet <= 0.0 {
        return 0.0;
    }
    let a = soc_det(dx);
    let b = x[0] * dx[0] - dot(&x[1..], &dx[1..]);
    let c = xdet;
    // f(t) = a t^2 + 2 b t + c, f(0) = c > 0; find first positive root.
    let mut alpha = cap;
    let disc = b * b - a * c;
    if a.abs() <= 1e-300 {
        if b < 0.0 {
            alpha = alpha.min(-c / (2.0 * b));
        }
    } else if disc >= 0.0 {
        let sq = disc.sqrt();
        // Stable roots of a t^2 + 2 b t + c.
        let q = -(b + b.signum() * sq);
        let mut roots = [f64::INFINITY; 2];
        if q != 0.0 {
            roots[0] = q / a;
            roots[1] = c / q;
        }
        for r in roots {
            if r > 0.0 && r.is_finite() {
                alpha = alpha.min(r);
            }
        }
    }
    // Keep the leading coordinate positive as well (excludes the negative cone branch).
    if dx[0] < 0.0 {
        alpha = alpha.min(-x[0] / dx[0]);
    }
    alpha.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nt_scaling_maps_z_and_s_to_same_point() {
        let s = [3.0, 1.0, -0.5, 0.7];
        let z = [2.0, -0.3, 0.9, 0.1];
        let w = SocScaling::new(&s, &z);
        let mut wz = [0.0; 4];
        let mut winv_s = [0.0; 4];
        w.apply(&z, &mut wz);
        w.apply_inv(&s, &mut winv_s);
        for i in 0..4 {
            assert!((wz[i] - winv_s[i]).abs() < 1e-12, "{wz:?} vs {winv_s:?}");
        }
        let mut back = [0.0; 4];
        w.apply_inv(&wz, &mut back);
        for i in 0..4 {
            assert!((back[i] - z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_product_round_trips() {
        let l = [2.0, 0.5, -0.4];
        let d = [0.3, -1.0, 2.0];
        let mut x = [0.0; 3];
        soc_inv_product(&l, &d, &mut x);
        let mut back = [0.0; 3];
        soc_product(&l, &x, &mut back);
        for i in 0..3 {
            assert!((back[i] - d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn max_step_hits_boundary() {
        let x = [1.0, 0.0];
        let dx = [0.0, 1.0];
        assert!((soc_max_step(&x, &dx, 10.0) - 1.0).abs() < 1e-12);
        let dx = [-1.0, 0.0];
        assert!((soc_max_step(&x, &dx, 10.0) - 1.0).abs() < 1e-12);
        let dx = [1.0, 0.5];
        assert_eq!(soc_max_step(&x, &dx, 10.0), 10.0);
    }
}
