//! Reweighted l1 (RA and its CWB/ARCTAN instances), the one-step dual-density algorithm
//! and the dual-density reweighted algorithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cone::SolverSettings;
use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::merit::{merit_gradient, MeritFamily, MeritFunction, SurrogateKind};
use crate::modeling::{
    solve_density, solve_weighted_l1, DensityConfig, DensityKind, DensitySolution, DensityStatus,
    Instance, WeightSetRule, WeightSetVariant, DEFAULT_W_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    Ra,
    DdaI,
    DdaII,
    DdaIII,
    DraI,
    DraII,
    DraIII,
    DraIV,
    DraV,
    DraVI,
    L1,
    Cwb,
    ArctanRa,
}

impl Variant {
    pub const ALL: [Variant; 13] = [
        Variant::Ra,
        Variant::DdaI,
        Variant::DdaII,
        Variant::DdaIII,
        Variant::DraI,
        Variant::DraII,
        Variant::DraIII,
        Variant::DraIV,
        Variant::DraV,
        Variant::DraVI,
        Variant::L1,
        Variant::Cwb,
        Variant::ArctanRa,
    ];

    /// Short lowercase name used on the command line and in result files.
    pub fn key(&self) -> &'static str {
        match self {
            Variant::Ra => "ra",
            Variant::DdaI => "dda1",
            Variant::DdaII => "dda2",
            Variant::DdaIII => "dda3",
            Variant::DraI => "dra1",
            Variant::DraII => "dra2",
            Variant::DraIII => "dra3",
            Variant::DraIV => "dra4",
            Variant::DraV => "dra5",
            Variant::DraVI => "dra6",
            Variant::L1 => "l1",
            Variant::Cwb => "cwb",
            Variant::ArctanRa => "arctan",
        }
    }

    pub fn is_dra(&self) -> bool {
        matches!(
            self,
            Variant::DraI
                | Variant::DraII
                | Variant::DraIII
                | Variant::DraIV
                | Variant::DraV
                | Variant::DraVI
        )
    }

    pub fn is_dda(&self) -> bool {
        matches!(self, Variant::DdaI | Variant::DdaII | Variant::DdaIII)
    }

    pub fn is_ra(&self) -> bool {
        matches!(self, Variant::Ra | Variant::Cwb | Variant::ArctanRa)
    }

    /// The one-step algorithm a DRA variant starts from.
    pub fn initial_dda(&self) -> Option<Variant> {
        match self {
            Variant::DraI | Variant::DraII => Some(Variant::DdaI),
            Variant::DraIII | Variant::DraIV => Some(Variant::DdaII),
            Variant::DraV | Variant::DraVI => Some(Variant::DdaIII),
            _ => None,
        }
    }

    /// Form of the dual-density program solved by DDA and DRA variants.
    pub fn density_kind(&self) -> Option<DensityKind> {
        match self {
            Variant::DdaI | Variant::DraI | Variant::DraII => Some(DensityKind::MeritBonus),
            Variant::DdaII | Variant::DraIII | Variant::DraIV => Some(DensityKind::MeritBound),
            Variant::DdaIII | Variant::DraV | Variant::DraVI => Some(DensityKind::SurrogateBound),
            _ => None,
        }
    }

    pub fn weight_set(&self) -> Option<WeightSetVariant> {
        match self {
            Variant::DraI | Variant::DraIII | Variant::DraV => Some(WeightSetVariant::Box),
            Variant::DraII | Variant::DraIV | Variant::DraVI => Some(WeightSetVariant::Inverse),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = s.trim().to_ascii_lowercase();
        let k = match k.as_str() {
            "arctan_ra" | "arctan-ra" => "arctan",
            "dra_i" | "dra(i)" => "dra1",
            "dra_ii" | "dra(ii)" => "dra2",
            "dra_iii" | "dra(iii)" => "dra3",
            "dra_iv" | "dra(iv)" => "dra4",
            "dra_v" | "dra(v)" => "dra5",
            "dra_vi" | "dra(vi)" => "dra6",
            "dda_i" | "dda(i)" => "dda1",
            "dda_ii" | "dda(ii)" => "dda2",
            "dda_iii" | "dda(iii)" => "dda3",
            other => other,
        };
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.key() == k)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub gamma_bound: f64,
    pub m: f64,
    pub m_star: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub merit: MeritFunction,
    pub surrogate: SurrogateKind,
    pub k_max: usize,
    pub zero_threshold: f64,
    /// Cap on `w` in the one-step dual-density program.
    pub w_cap: f64,
    /// Stop once `||x^k - x^(k-1)||_inf <= 1e-8`.
    pub early_stop: bool,
    #[serde(skip)]
    pub solver: SolverSettings,
}

impl AlgorithmConfig {
    /// Default constants for `variant`.
    pub fn defaults(variant: Variant) -> Self {
        let fraction = MeritFunction::fraction(1e-15).expect("valid constant");
        let mut c = Self {
            variant,
            alpha: 1e-5,
            gamma_bound: 1.0,
            m: 10.0,
            m_star: 10.0,
            sigma1: 0.1,
            sigma2: 0.1,
            merit: fraction,
            surrogate: SurrogateKind::J3InvPsi,
            k_max: 5,
            zero_threshold: 1e-5,
            w_cap: DEFAULT_W_CAP,
            early_stop: false,
            solver: SolverSettings::default(),
        };
        match variant {
            Variant::DdaI | Variant::DraI | Variant::DraII => {
                c.alpha = 1e-8;
                c.m = 100.0;
                c.m_star = 1000.0;
            }
            Variant::Ra => c.merit = MeritFunction::new(MeritFamily::Log, 0.1).expect("valid constant"),
            Variant::Cwb => c.merit = MeritFunction::new(MeritFamily::CwbLog, 0.1).expect("valid constant"),
            Variant::ArctanRa => {
                c.merit = MeritFunction::new(MeritFamily::Arctan, 0.1).expect("valid constant")
            }
            Variant::L1 => c.k_max = 1,
            _ => {}
        }
        if variant.is_dda() {
            c.k_max = 0;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        pos("zero_threshold", self.zero_threshold)?;
        if self.variant.is_ra() && self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        if let Some(kind) = self.variant.density_kind() {
            self.density_config(kind).validate()?;
        }
        if let Some(ws) = self.variant.weight_set() {
            self.rule(ws, vec![0.0; 1]).validate(1)?;
        }
        Ok(())
    }

    pub fn density_config(&self, kind: DensityKind) -> DensityConfig {
        DensityConfig {
            kind,
            alpha: self.alpha,
            gamma_bound: self.gamma_bound,
            sigma1: self.sigma1,
            merit: self.merit,
            surrogate: self.surrogate,
            w_cap: self.w_cap,
        }
    }

    fn rule(&self, variant: WeightSetVariant, anchor: Vec<f64>) -> WeightSetRule {
        WeightSetRule {
            variant,
            m: self.m,
            m_star: self.m_star,
            sigma2: self.sigma2,
            anchor,
        }
    }
}

/// `|x_i| > threshold * max(1, ||x||_inf)` count.
pub fn sparsity(x: &[f64], threshold: f64) -> usize {
    let cut = threshold * norm_inf(x).max(1.0);
    x.iter().filter(|v| v.abs() > cut).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepStatus {
    Optimal,
    EpsFloored,
    Linearized,
}

impl From<DensityStatus> for StepStatus {
    fn from(s: DensityStatus) -> Self {
        match s {
            DensityStatus::Exact => StepStatus::Optimal,
            DensityStatus::ExactFloored => StepStatus::EpsFloored,
            DensityStatus::Linearized => StepStatus::Linearized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub k: usize,
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    pub lam6: Vec<f64>,
    /// `w'|x|`
    pub objective: f64,
    /// objective of the dual-density program, when one was solved
    pub density_objective: Option<f64>,
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub variant: Variant,
    pub iterates: Vec<Iterate>,
    pub final_x: Vec<f64>,
    pub final_sparsity: usize,
    /// set when a subproblem failed and the run stopped early
    pub failure: Option<String>,
}

impl RunTrace {
    fn from_iterates(
        variant: Variant,
        iterates: Vec<Iterate>,
        threshold: f64,
        failure: Option<String>,
    ) -> Result<Self> {
        let Some(last) = iterates.last() else {
            return Err(Error::Subproblem(
                failure.unwrap_or_else(|| "no iterate produced".into()),
            ));
        };
        let final_x = last.x.clone();
        Ok(Self {
            variant,
            final_sparsity: sparsity(&final_x, threshold),
            final_x,
            iterates,
            failure,
        })
    }
}

fn weighted_step(
    inst: &Instance,
    w: &[f64],
    settings: &SolverSettings,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let sol = solve_weighted_l1(inst, w, settings)?;
    let obj = w.iter().zip(&sol.primal.x).map(|(a, b)| a * b.abs()).sum();
    Ok((sol.primal.x, sol.dual.lam6, obj))
}

fn converged(prev: Option<&Iterate>, x: &[f64]) -> bool {
    prev.is_some_and(|p| p.x.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-8))
}

/// Reweighted l1: `w^(k+1) = grad Psi(|x^k|)`.
pub fn ra_solve(
    inst: &Instance,
    merit: &MeritFunction,
    w0: &[f64],
    k_max: usize,
    settings: &SolverSettings,
) -> Result<RunTrace> {
    ra_run(Variant::Ra, inst, merit, w0, k_max, 1e-5, false, settings)
}

#[allow(clippy::too_many_arguments)]
fn ra_run(
    variant: Variant,
    inst: &Instance,
    merit: &MeritFunction,
    w0: &[f64],
    k_max: usize,
    threshold: f64,
    early_stop: bool,
    settings: &SolverSettings,
) -> Result<RunTrace> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    crate::modeling::Weight::new(w0.to_vec())?;
    let mut w = w0.to_vec();
    let mut iterates: Vec<Iterate> = Vec::new();
    let mut failure = None;
    for k in 1..=k_max {
        match weighted_step(inst, &w, settings) {
            Ok((x, lam6, objective)) => {
                let stop = early_stop && converged(iterates.last(), &x);
                let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                let next = merit_gradient(merit, &abs)?;
                iterates.push(Iterate {
                    k,
                    w: std::mem::replace(&mut w, next),
                    x,
                    lam6,
                    objective,
                    density_objective: None,
                    status: StepStatus::Optimal,
                });
                if stop {
                    break;
                }
            }
            Err(e) if e.is_numerical() => {
                failure = Some(format!("iteration {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    RunTrace::from_iterates(variant, iterates, threshold, failure)
}

/// Plain l1 minimization over `T`.
pub fn l1_solve(inst: &Instance, settings: &SolverSettings) -> Result<Vec<f64>> {
    let w = vec![1.0; inst.n()];
    Ok(weighted_step(inst, &w, settings)?.0)
}

#[derive(Debug, Clone)]
pub struct DdaOutput {
    pub w: Vec<f64>,
    pub lam6: Vec<f64>,
    pub x: Vec<f64>,
    pub density: DensitySolution,
    pub objective: f64,
}

impl DdaOutput {
    fn iterate(&self, k: usize) -> Iterate {
        Iterate {
            k,
            w: self.w.clone(),
            x: self.x.clone(),
            lam6: self.density.dual.lam6.clone(),
            objective: self.objective,
            density_objective: Some(self.density.objective),
            status: self.density.status.into(),
        }
    }
}

/// One-step algorithm: weights from the dual-density program, then one weighted solve.
pub fn dda_solve(variant: Variant, inst: &Instance, cfg: &AlgorithmConfig) -> Result<DdaOutput> {
    let kind = variant
        .is_dda()
        .then(|| variant.density_kind())
        .flatten()
        .ok_or_else(|| Error::InvalidArgument(format!("{variant} is not a one-step variant")))?;
    let density = solve_density(inst, &cfg.density_config(kind), None, &cfg.solver)?;
    let (x, _, objective) = weighted_step(inst, &density.w, &cfg.solver)?;
    Ok(DdaOutput {
        w: density.w.clone(),
        lam6: density.dual.lam6.clone(),
        x,
        density,
        objective,
    })
}

/// Dual-density reweighted algorithm; the trace holds the initial step as `k = 0`.
pub fn dra_solve(variant: Variant, inst: &Instance, cfg: &AlgorithmConfig) -> Result<RunTrace> {
    let (Some(dda), Some(kind), Some(ws)) = (
        variant.initial_dda(),
        variant.density_kind(),
        variant.weight_set(),
    ) else {
        return Err(Error::InvalidArgument(format!("{variant} is not a DRA variant")));
    };
    let first = dda_solve(dda, inst, cfg)?;
    let mut iterates = vec![first.iterate(0)];
    let dcfg = cfg.density_config(kind);
    let mut failure = None;
    for k in 1..=cfg.k_max {
        let anchor = iterates.last().expect("non-empty").x.clone();
        let rule = cfg.rule(ws, anchor);
        let step = solve_density(inst, &dcfg, Some(&rule), &cfg.solver).and_then(|d| {
            let (x, _, objective) = weighted_step(inst, &d.w, &cfg.solver)?;
            Ok((d, x, objective))
        });
        match step {
            Ok((d, x, objective)) => {
                let stop = cfg.early_stop && converged(iterates.last(), &x);
                iterates.push(Iterate {
                    k,
                    w: d.w,
                    x,
                    lam6: d.dual.lam6,
                    objective,
                    density_objective: Some(d.objective),
                    status: d.status.into(),
                });
                if stop {
                    break;
                }
            }
            Err(e) if e.is_numerical() => {
                failure = Some(format!("iteration {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    RunTrace::from_iterates(variant, iterates, cfg.zero_threshold, failure)
}

pub fn run_algorithm(inst: &Instance, cfg: &AlgorithmConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let v = cfg.variant;
    if v.is_dra() {
        return dra_solve(v, inst, cfg);
    }
    if v.is_dda() {
        let out = dda_solve(v, inst, cfg)?;
        return RunTrace::from_iterates(v, vec![out.iterate(0)], cfg.zero_threshold, None);
    }
    let k_max = if v == Variant::L1 { 1 } else { cfg.k_max };
    let w0 = vec![1.0; inst.n()];
    ra_run(
        v,
        inst,
        &cfg.merit,
        &w0,
        k_max,
        cfg.zero_threshold,
        cfg.early_stop,
        &cfg.solver,
    )
}
