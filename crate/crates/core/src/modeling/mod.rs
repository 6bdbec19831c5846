//! Problem data and the cone-program builders for weighted l1 minimization and the
//! dual-density relaxations.

mod density;
mod weighted;

pub use density::{
    build_dda, build_dra_subproblem, solve_density, solve_nonconic, DensityConfig, DensityKind,
    DensitySolution, DensityStatus, DEFAULT_W_CAP, EPS_FLOOR,
};
pub use weighted::{
    build_aux_tj, build_weighted_l1, extract_aux_dual, extract_dual, extract_primal,
    solve_weighted_l1, AuxDual, WeightedL1Solution,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, Matrix};

/// The feasible set `T = {x : ||y - A x||_2 <= eps, B x <= b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    a: Matrix,
    bmat: Matrix,
    y: Vec<f64>,
    b: Vec<f64>,
    eps_noise: f64,
}

impl Instance {
    pub fn new(a: Matrix, bmat: Matrix, y: Vec<f64>, b: Vec<f64>, eps_noise: f64) -> Result<Self> {
        if a.rows() != y.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows but y has length {}",
                a.rows(),
                y.len()
            )));
        }
        if bmat.rows() != b.len() {
            return Err(Error::Dimension(format!(
                "B has {} rows but b has length {}",
                bmat.rows(),
                b.len()
            )));
        }
        if bmat.rows() > 0 && bmat.cols() != a.cols() {
            return Err(Error::Dimension(format!(
                "A has {} columns but B has {}",
                a.cols(),
                bmat.cols()
            )));
        }
        if !(eps_noise >= 0.0 && eps_noise.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise radius must be nonnegative, got {eps_noise}"
            )));
        }
        let finite = a
            .as_slice()
            .iter()
            .chain(bmat.as_slice())
            .chain(&y)
            .chain(&b)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite instance data".into()));
        }
        let bmat = if bmat.rows() == 0 {
            Matrix::zeros(0, a.cols())
        } else {
            bmat
        };
        Ok(Self {
            a,
            bmat,
            y,
            b,
            eps_noise,
        })
    }

    /// Instance without the inequality block (`l = 0`).
    pub fn without_inequalities(a: Matrix, y: Vec<f64>, eps_noise: f64) -> Result<Self> {
        let n = a.cols();
        Self::new(a, Matrix::zeros(0, n), y, Vec::new(), eps_noise)
    }

    /// The four-variable system with `eps = 0.1` whose sparsest point is `(0, 0, 2, 1)`.
    pub fn example1() -> Self {
        let a = Matrix::from_row_major(
            3,
            4,
            vec![1.0, 0.0, -2.0, 5.0, 0.0, 1.0, 4.0, -9.0, 1.0, 0.0, -2.0, 5.0],
        );
        let bmat = Matrix::from_row_major(
            3,
            4,
            vec![-0.5, 0.0, 1.0, -2.5, 0.5, -0.5, -1.0, 2.0, -3.0, -3.0, -2.0, 3.0],
        );
        Self::new(a, bmat, vec![1.0, -1.0, 1.0], vec![-0.5, 1.0, -1.0], 0.1)
            .expect("fixture is well formed")
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn l(&self) -> usize {
        self.bmat.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn bmat(&self) -> &Matrix {
        &self.bmat
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn eps_noise(&self) -> f64 {
        self.eps_noise
    }

    pub fn with_eps_noise(&self, eps_noise: f64) -> Result<Self> {
        Self::new(
            self.a.clone(),
            self.bmat.clone(),
            self.y.clone(),
            self.b.clone(),
            eps_noise,
        )
    }

    /// `||y - A x||_2`
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        let r: Vec<f64> = self.y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        norm2(&r)
    }

    /// Largest violation of `||y - A x|| <= eps` and `B x <= b`, zero when feasible.
    pub fn infeasibility(&self, x: &[f64]) -> f64 {
        let mut v = (self.residual_norm(x) - self.eps_noise).max(0.0);
        if self.l() > 0 {
            let bx = self.bmat.mul_vec(x);
            for (bi, ci) in bx.iter().zip(&self.b) {
                v = v.max(bi - ci);
            }
        }
        v
    }

    /// Membership in `T` with a tolerance scaled by the data.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let scale = 1.0 + norm_inf(&self.y).max(norm_inf(&self.b));
        self.infeasibility(x) <= tol * scale
    }
}

/// A nonnegative weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(Vec<f64>);

impl Weight {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "weights must be finite and nonnegative, entry {i} is {v}"
            )));
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Epigraph variables `(x, t, gamma)` with `|x| <= t`, `gamma = y - A x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalTriple {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// The six multiplier blocks of the weighted l1 dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVars {
    pub lam1: f64,
    pub lam2: Vec<f64>,
    pub lam3: Vec<f64>,
    pub lam4: Vec<f64>,
    pub lam5: Vec<f64>,
    pub lam6: Vec<f64>,
}

impl DualVars {
    pub fn zeros(inst: &Instance) -> Self {
        let n = inst.n();
        Self {
            lam1: 0.0,
            lam2: vec![0.0; inst.l()],
            lam3: vec![0.0; inst.m()],
            lam4: vec![0.0; n],
            lam5: vec![0.0; n],
            lam6: vec![0.0; n],
        }
    }

    /// `-lam1 eps - lam2'b + lam3'y`
    pub fn objective(&self, inst: &Instance) -> f64 {
        -self.lam1 * inst.eps_noise() - dot(&self.lam2, inst.b()) + dot(&self.lam3, inst.y())
    }

    /// Largest violation of the constraints defining `D(w)`.
    pub fn infeasibility(&self, inst: &Instance, w: &[f64]) -> f64 {
        let mut v = (norm2(&self.lam3) - self.lam1).max(0.0);
        v = v.max(-self.lam1);
        for x in self
            .lam2
            .iter()
            .chain(&self.lam4)
            .chain(&self.lam5)
            .chain(&self.lam6)
        {
            v = v.max(-x);
        }
        let bt = inst.bmat().tr_mul_vec(&self.lam2);
        let at = inst.a().tr_mul_vec(&self.lam3);
        for i in 0..inst.n() {
            v = v.max((bt[i] - at[i] + self.lam4[i] - self.lam5[i]).abs());
            v = v.max((self.lam4[i] + self.lam5[i] + self.lam6[i] - w[i]).abs());
        }
        v
    }

    pub fn scaled(&self, f: f64) -> Self {
        let sc = |v: &[f64]| v.iter().map(|x| x * f).collect::<Vec<_>>();
        Self {
            lam1: self.lam1 * f,
            lam2: sc(&self.lam2),
            lam3: sc(&self.lam3),
            lam4: sc(&self.lam4),
            lam5: sc(&self.lam5),
            lam6: sc(&self.lam6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightSetVariant {
    /// `{w >= 0 : anchor'w <= M, w <= M* e}`
    Box,
    /// `{w >= 0 : w_i <= M / (|anchor_i| + sigma2)}`
    Inverse,
}

/// The bounded weight set built around the previous iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSetRule {
    pub variant: WeightSetVariant,
    pub m: f64,
    pub m_star: f64,
    pub sigma2: f64,
    pub anchor: Vec<f64>,
}

impl WeightSetRule {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.anchor.len() != n {
            return Err(Error::Dimension(format!(
                "weight-set anchor has length {}, expected {n}",
                self.anchor.len()
            )));
        }
        if self.anchor.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight-set anchor".into()));
        }
        match self.variant {
            WeightSetVariant::Box => {
                if !(1.0 <= self.m && self.m <= self.m_star && self.m_star.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "box weight set needs 1 <= M <= M*, got M = {}, M* = {}",
                        self.m, self.m_star
                    )));
                }
            }
            WeightSetVariant::Inverse => {
                if !(self.sigma2 > 0.0 && self.m > 0.0 && self.m.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "inverse weight set needs M > 0 and sigma2 > 0, got M = {}, sigma2 = {}",
                        self.m, self.sigma2
                    )));
                }
            }
        }
        Ok(())
    }

    /// Componentwise upper bounds on `w`.
    pub fn upper_bounds(&self) -> Vec<f64> {
        match self.variant {
            WeightSetVariant::Box => vec![self.m_star; self.anchor.len()],
            WeightSetVariant::Inverse => self
                .anchor
                .iter()
                .map(|a| self.m / (a.abs() + self.sigma2))
                .collect(),
        }
    }

    /// Largest violation of the set's inequalities (zero inside).
    pub fn violation(&self, w: &[f64]) -> f64 {
        let mut v = 0.0_f64;
        for (wi, ub) in w.iter().zip(self.upper_bounds()) {
            v = v.max(-wi).max(wi - ub);
        }
        if self.variant == WeightSetVariant::Box {
            v = v.max(dot(&self.anchor, w) - self.m);
        }
        v
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.violation(w) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_point_is_feasible() {
        let inst = Instance::example1();
        assert!(inst.is_feasible(&[0.0, 0.0, 2.0, 1.0], 1e-12));
        assert!(inst.is_feasible(&[0.5, 0.0, -0.25, 0.0], 1e-12));
        assert!(!inst.is_feasible(&[0.0; 4], 1e-6));
    }

    #[test]
    fn instance_rejects_bad_dimensions() {
        let a = Matrix::zeros(2, 3);
        assert!(Instance::without_inequalities(a.clone(), vec![0.0], 0.1).is_err());
        assert!(Instance::new(a.clone(), Matrix::zeros(1, 2), vec![0.0; 2], vec![0.0], 0.1).is_err());
        assert!(Instance::without_inequalities(a, vec![0.0; 2], -1.0).is_err());
    }

    #[test]
    fn weights_must_be_nonnegative() {
        assert!(Weight::new(vec![1.0, -0.5]).is_err());
        assert!(Weight::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(Weight::new(vec![0.0, 2.0]).is_ok());
    }

    #[test]
    fn inverse_rule_bounds() {
        let rule = WeightSetRule {
            variant: WeightSetVariant::Inverse,
            m: 10.0,
            m_star: f64::INFINITY,
            sigma2: 0.1,
            anchor: vec![0.0; 3],
        };
        rule.validate(3).unwrap();
        for ub in rule.upper_bounds() {
            assert!((ub - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn box_rule_validation() {
        let mut rule = WeightSetRule {
            variant: WeightSetVariant::Box,
            m: 10.0,
            m_star: 5.0,
            sigma2: 0.0,
            anchor: vec![0.0; 2],
        };
        assert!(rule.validate(2).is_err());
        rule.m_star = 10.0;
        rule.validate(2).unwrap();
        assert!(rule.contains(&[10.0, 10.0], 1e-12));
        assert!(!rule.contains(&[10.5, 0.0], 1e-12));
    }
}
