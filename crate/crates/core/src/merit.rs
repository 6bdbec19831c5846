//! Merit functions for sparsity, their gradients, and the surrogates `f(lambda6)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeritFamily {
    /// `1 - log(s + eps) / log(eps)`
    Log,
    /// `s / (s + eps)`
    Fraction,
    /// `(s + eps^(1/eps))^eps`
    Power,
    /// `(2/pi) atan(s / eps)`
    Arctan,
    /// `log(s + eps)`; gradient-only (weights `1/(s + eps)`)
    CwbLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritFunction {
    family: MeritFamily,
    eps: f64,
}

impl MeritFunction {
    pub fn new(family: MeritFamily, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "merit parameter must be positive, got {eps}"
            )));
        }
        if matches!(family, MeritFamily::Log | MeritFamily::Power) && eps >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "{family:?} merit requires eps in (0, 1), got {eps}"
            )));
        }
        Ok(Self { family, eps })
    }

    pub fn fraction(eps: f64) -> Result<Self> {
        Self::new(MeritFamily::Fraction, eps)
    }

    pub fn family(&self) -> MeritFamily {
        self.family
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Only the fraction family has an exact conic representation here.
    pub fn soc_exact(&self) -> bool {
        self.family == MeritFamily::Fraction
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.family, eps)
    }

    /// Per-coordinate value `phi(s)`.
    pub fn phi(&self, s: f64) -> f64 {
        let e = self.eps;
        match self.family {
            MeritFamily::Log => 1.0 - (s + e).ln() / e.ln(),
            MeritFamily::Fraction => s / (s + e),
            MeritFamily::Power => (s + power_shift(e)).powf(e),
            MeritFamily::Arctan => std::f64::consts::FRAC_2_PI * (s / e).atan(),
            MeritFamily::CwbLog => (s + e).ln(),
        }
    }

    /// Per-coordinate derivative `phi'(s)`, one-sided at 0.
    pub fn dphi(&self, s: f64) -> f64 {
        let e = self.eps;
        match self.family {
            MeritFamily::Log => -1.0 / ((s + e) * e.ln()),
            MeritFamily::Fraction => e / ((s + e) * (s + e)),
            MeritFamily::Power => e * (s + power_shift(e)).powf(e - 1.0),
            MeritFamily::Arctan => std::f64::consts::FRAC_2_PI * e / (s * s + e * e),
            MeritFamily::CwbLog => 1.0 / (s + e),
        }
    }
}

/// `eps^(1/eps)`; underflows to 0 for small eps.
fn power_shift(e: f64) -> f64 {
    (e.ln() / e).exp()
}

fn check_nonneg(s: &[f64]) -> Result<()> {
    if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Domain(format!(
            "merit argument must be nonnegative, entry {i} is {v}"
        )));
    }
    Ok(())
}

/// `Psi(s) = sum_i phi(s_i)`.
pub fn merit_value(m: &MeritFunction, s: &[f64]) -> Result<f64> {
    check_nonneg(s)?;
    Ok(s.iter().map(|&v| m.phi(v)).sum())
}

pub fn merit_gradient(m: &MeritFunction, s: &[f64]) -> Result<Vec<f64>> {
    check_nonneg(s)?;
    Ok(s.iter().map(|&v| m.dphi(v)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SurrogateKind {
    /// `exp(-Psi)`
    J1Exp,
    /// `-log(Psi + sigma1)`
    J2NegLog,
    /// `1 / (Psi + sigma1)`
    J3InvPsi,
    /// `(1/n) sum_i 1 / (phi_i + sigma1)`
    J4MeanInv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub kind: SurrogateKind,
    pub sigma1: f64,
    pub merit: MeritFunction,
}

impl Surrogate {
    pub fn new(kind: SurrogateKind, sigma1: f64, merit: MeritFunction) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma1 must be positive, got {sigma1}"
            )));
        }
        Ok(Self {
            kind,
            sigma1,
            merit,
        })
    }

    /// Value as a function of `Psi` alone (all kinds except J4).
    pub fn of_psi(&self, psi: f64) -> Result<f64> {
        match self.kind {
            SurrogateKind::J1Exp => Ok((-psi).exp()),
            SurrogateKind::J2NegLog => {
                let a = psi + self.sigma1;
                if a <= 0.0 {
                    return Err(Error::Domain(format!("log of nonpositive value {a}")));
                }
                Ok(-a.ln())
            }
            SurrogateKind::J3InvPsi => Ok(1.0 / (psi + self.sigma1)),
            SurrogateKind::J4MeanInv => Err(Error::InvalidArgument(
                "J4 is not a function of Psi alone".into(),
            )),
        }
    }

    /// Derivative with respect to `Psi` (all kinds except J4).
    pub fn dpsi(&self, psi: f64) -> f64 {
        match self.kind {
            SurrogateKind::J1Exp => -(-psi).exp(),
            SurrogateKind::J2NegLog => -1.0 / (psi + self.sigma1),
            SurrogateKind::J3InvPsi => -1.0 / ((psi + self.sigma1) * (psi + self.sigma1)),
            SurrogateKind::J4MeanInv => f64::NAN,
        }
    }

    /// Gradient with respect to `lambda6`.
    pub fn gradient(&self, lam6: &[f64]) -> Result<Vec<f64>> {
        check_nonneg(lam6)?;
        let m = &self.merit;
        if self.kind == SurrogateKind::J4MeanInv {
            let n = lam6.len() as f64;
            return Ok(lam6
                .iter()
                .map(|&v| {
                    let d = m.phi(v) + self.sigma1;
                    -m.dphi(v) / (n * d * d)
                })
                .collect());
        }
        let psi = merit_value(m, lam6)?;
        let f = self.dpsi(psi);
        Ok(lam6.iter().map(|&v| f * m.dphi(v)).collect())
    }
}

pub fn surrogate_value(f: &Surrogate, lam6: &[f64]) -> Result<f64> {
    check_nonneg(lam6)?;
    if f.kind == SurrogateKind::J4MeanInv {
        if lam6.is_empty() {
            return Ok(0.0);
        }
        let n = lam6.len() as f64;
        return Ok(lam6
            .iter()
            .map(|&v| 1.0 / (f.merit.phi(v) + f.sigma1))
            .sum::<f64>()
            / n);
    }
    f.of_psi(merit_value(&f.merit, lam6)?)
}
