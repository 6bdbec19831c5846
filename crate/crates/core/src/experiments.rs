//! Random instances, the recovery criterion, sparsity sweeps and their output files.
//!
//! Randomness comes from ChaCha20 seeded with `seed_from_u64`; normals use the
//! Box-Muller transform written out here so that output does not depend on a
//! distribution crate's sampling algorithm.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_algorithm, AlgorithmConfig, RunTrace, Variant};
use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix};
use crate::modeling::Instance;

pub const SUCCESS_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Case {
    /// 50 x 200, no inequality block
    N1,
    /// 50 x 200 with a 50 x 200 Gaussian `B`
    N2,
    Custom { m: usize, n: usize, l: usize },
}

impl Case {
    pub fn dims(&self) -> Dims {
        match *self {
            Case::N1 => Dims { m: 50, n: 200, l: 0 },
            Case::N2 => Dims { m: 50, n: 200, l: 50 },
            Case::Custom { m, n, l } => Dims { m, n, l },
        }
    }
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn normals(rng: &mut ChaCha20Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| normal(rng)).collect()
}

/// Seed of trial `trial` at sparsity level `sparsity`, a function of these three alone.
pub fn trial_seed(seed: u64, sparsity: usize, trial: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((sparsity as u64) << 32) | trial as u64);
    rng.next_u64()
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub x_star: Vec<f64>,
    pub seed: u64,
    /// `|c1| * eps`, the realized `||y - A x*||`
    pub residual: f64,
}

impl GeneratedInstance {
    pub fn x_star_feasible(&self) -> bool {
        self.residual <= self.instance.eps_noise()
    }
}

/// Draws `A, B, x*, c, c1, d` in that order and sets `y = A x* + c1 eps c / ||c||`,
/// `b = B x* + d`. With `reject_large_c1`, `(c, c1)` is redrawn until `|c1| <= 1`.
pub fn generate_instance(
    dims: Dims,
    k: usize,
    eps_noise: f64,
    seed: u64,
    reject_large_c1: bool,
) -> Result<GeneratedInstance> {
    let Dims { m, n, l } = dims;
    if k > n {
        return Err(Error::InvalidArgument(format!("sparsity {k} exceeds n = {n}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty dimensions".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let a = Matrix::from_row_major(m, n, normals(&mut rng, m * n));
    let bmat = Matrix::from_row_major(l, n, normals(&mut rng, l * n));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut support = idx[..k].to_vec();
    support.sort_unstable();
    let mut x_star = vec![0.0; n];
    for &i in &support {
        x_star[i] = normal(&mut rng);
    }
    let (c, c1) = loop {
        let c = normals(&mut rng, m);
        let c1 = normal(&mut rng);
        if !reject_large_c1 || c1.abs() <= 1.0 {
            break (c, c1);
        }
    };
    let d: Vec<f64> = (0..l).map(|_| normal(&mut rng).abs()).collect();
    let cn = norm2(&c);
    let scale = if cn > 0.0 { c1 * eps_noise / cn } else { 0.0 };
    let ax = a.mul_vec(&x_star);
    let y: Vec<f64> = ax.iter().zip(&c).map(|(v, ci)| v + scale * ci).collect();
    let bx = bmat.mul_vec(&x_star);
    let b: Vec<f64> = bx.iter().zip(&d).map(|(v, di)| v + di).collect();
    let instance = Instance::new(a, bmat, y, b, eps_noise)?;
    Ok(GeneratedInstance {
        instance,
        x_star,
        seed,
        residual: (c1 * eps_noise).abs(),
    })
}

/// `||x - x*||_2 / ||x*||_2`
pub fn relative_error(x_found: &[f64], x_star: &[f64]) -> Result<f64> {
    let ns = norm2(x_star);
    if ns == 0.0 {
        return Err(Error::InvalidArgument("reference vector is zero".into()));
    }
    if x_found.len() != x_star.len() {
        return Err(Error::Dimension(format!(
            "lengths {} and {} differ",
            x_found.len(),
            x_star.len()
        )));
    }
    let d: Vec<f64> = x_found.iter().zip(x_star).map(|(a, b)| a - b).collect();
    Ok(norm2(&d) / ns)
}

pub fn success(x_found: &[f64], x_star: &[f64]) -> Result<bool> {
    Ok(relative_error(x_found, x_star)? <= SUCCESS_TOL)
}

/// An algorithm entry of a sweep; `label` names it in the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub label: String,
    pub config: AlgorithmConfig,
}

impl AlgorithmSpec {
    pub fn new(label: impl Into<String>, config: AlgorithmConfig) -> Self {
        Self {
            label: label.into(),
            config,
        }
    }
}

/// Parses `name[:key=value]...`, e.g. `dra6:k=1:alpha=1e-5`. Keys: `k`, `alpha`, `m`,
/// `mstar`, `sigma1`, `sigma2`, `gamma`, `eps` (merit parameter), `wcap`.
/// The whole string becomes the label.
impl std::str::FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut parts = text.split(':');
        let name = parts.next().unwrap_or_default();
        let variant: Variant = name.parse()?;
        let mut c = AlgorithmConfig::defaults(variant);
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got '{kv}'")))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad number '{v}' for {k}")))
            };
            match k {
                "k" => {
                    c.k_max = v
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad iteration count '{v}'")))?
                }
                "alpha" => c.alpha = num()?,
                "m" => c.m = num()?,
                "mstar" => c.m_star = num()?,
                "sigma1" => c.sigma1 = num()?,
                "sigma2" => c.sigma2 = num()?,
                "gamma" => c.gamma_bound = num()?,
                "eps" => c.merit = c.merit.with_eps(num()?)?,
                "wcap" => c.w_cap = num()?,
                other => {
                    return Err(Error::InvalidArgument(format!("unknown key '{other}' in '{text}'")))
                }
            }
        }
        c.validate()?;
        Ok(Self::new(text, c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub case: Case,
    pub sparsity_min: usize,
    pub sparsity_max: usize,
    pub trials: usize,
    pub eps_noise: f64,
    pub algorithms: Vec<AlgorithmSpec>,
    pub seed: u64,
    #[serde(default)]
    pub reject_large_c1: bool,
    /// Measure wall time; off by default so result files are reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.case.dims();
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.sparsity_min > self.sparsity_max {
            return Err(Error::InvalidArgument(format!(
                "empty sparsity range {}..{}",
                self.sparsity_min, self.sparsity_max
            )));
        }
        if self.sparsity_min == 0 {
            return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
        }
        if self.sparsity_max >= d.m {
            return Err(Error::InvalidArgument(format!(
                "sparsity {} must be below m = {}",
                self.sparsity_max, d.m
            )));
        }
        if !(self.eps_noise >= 0.0 && self.eps_noise.is_finite()) {
            return Err(Error::InvalidArgument("noise level must be nonnegative".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("no algorithms given".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &self.algorithms {
            if !seen.insert(a.label.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate label '{}'", a.label)));
            }
            a.config.validate()?;
        }
        Ok(())
    }

    /// One-line description written at the top of result files.
    pub fn describe(&self) -> String {
        let d = self.case.dims();
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.label.as_str()).collect();
        format!(
            "m={} n={} l={} sparsity={}..{} trials={} eps_noise={:e} seed={} reject_large_c1={} algorithms={}",
            d.m,
            d.n,
            d.l,
            self.sparsity_min,
            self.sparsity_max,
            self.trials,
            self.eps_noise,
            self.seed,
            self.reject_large_c1,
            algs.join(",")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: String,
    pub sparsity: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub relative_error: Option<f64>,
    pub sparsity_found: Option<usize>,
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub algorithm: String,
    pub sparsity: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub description: String,
    pub rows: Vec<RateRow>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn empty() -> Self {
        Self {
            description: String::new(),
            rows: Vec::new(),
            records: Vec::new(),
        }
    }

    pub fn rate(&self, algorithm: &str, sparsity: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.sparsity == sparsity)
            .map(|r| r.rate)
    }

    /// Mean of `algorithm`'s rates over all sparsity levels.
    pub fn mean_rate(&self, algorithm: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .map(|r| r.rate)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// The iterate that a run stopped at iteration `k` would have returned.
fn x_at(trace: &RunTrace, k: usize) -> &[f64] {
    trace
        .iterates
        .iter()
        .rev()
        .find(|it| it.k <= k)
        .map(|it| it.x.as_slice())
        .unwrap_or(&trace.final_x)
}

/// Entries that differ only in `k_max` share one run; shorter ones read a prefix.
fn group_specs(algs: &[AlgorithmSpec]) -> Vec<(AlgorithmConfig, Vec<usize>)> {
    let mut groups: Vec<(AlgorithmConfig, Vec<usize>)> = Vec::new();
    for (i, a) in algs.iter().enumerate() {
        let mut key = a.config.clone();
        let found = groups.iter_mut().find(|(g, _)| {
            key.k_max = g.k_max;
            *g == key
        });
        match found {
            Some((g, members)) => {
                g.k_max = g.k_max.max(a.config.k_max);
                members.push(i);
            }
            None => groups.push((a.config.clone(), vec![i])),
        }
    }
    groups
}

fn run_trial(spec: &SweepSpec, groups: &[(AlgorithmConfig, Vec<usize>)], k: usize, t: usize) -> Vec<TrialRecord> {
    let seed = trial_seed(spec.seed, k, t);
    let mut out: Vec<Option<TrialRecord>> = vec![None; spec.algorithms.len()];
    let record = |label: &str| TrialRecord {
        algorithm: label.to_string(),
        sparsity: k,
        trial: t,
        seed,
        success: false,
        relative_error: None,
        sparsity_found: None,
        seconds: None,
        error: None,
    };
    let gen = generate_instance(spec.case.dims(), k, spec.eps_noise, seed, spec.reject_large_c1);
    let gen = match gen {
        Ok(g) => g,
        Err(e) => {
            return spec
                .algorithms
                .iter()
                .map(|a| TrialRecord {
                    error: Some(e.to_string()),
                    ..record(&a.label)
                })
                .collect();
        }
    };
    for (cfg, members) in groups {
        let start = Instant::now();
        let run = run_algorithm(&gen.instance, cfg);
        let secs = spec.timing.then(|| start.elapsed().as_secs_f64());
        for &i in members {
            let a = &spec.algorithms[i];
            let mut r = record(&a.label);
            r.seconds = secs;
            match &run {
                Ok(trace) => {
                    let x = x_at(trace, a.config.k_max);
                    let err = relative_error(x, &gen.x_star).unwrap_or(f64::INFINITY);
                    r.relative_error = Some(err);
                    r.success = err <= SUCCESS_TOL;
                    r.sparsity_found = Some(crate::algorithms::sparsity(x, a.config.zero_threshold));
                    r.error = trace.failure.clone();
                }
                Err(e) => r.error = Some(e.to_string()),
            }
            out[i] = Some(r);
        }
    }
    out.into_iter().map(|r| r.expect("every entry is in a group")).collect()
}

fn aggregate(spec: &SweepSpec, records: &[TrialRecord]) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for a in &spec.algorithms {
        for k in spec.sparsity_min..=spec.sparsity_max {
            let rs: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.algorithm == a.label && r.sparsity == k)
                .collect();
            let successes = rs.iter().filter(|r| r.success).count();
            let mean_seconds = if spec.timing {
                let s: Vec<f64> = rs.iter().filter_map(|r| r.seconds).collect();
                (!s.is_empty()).then(|| s.iter().sum::<f64>() / s.len() as f64)
            } else {
                None
            };
            rows.push(RateRow {
                algorithm: a.label.clone(),
                sparsity: k,
                trials: rs.len(),
                successes,
                rate: successes as f64 / rs.len().max(1) as f64,
                mean_seconds,
            });
        }
    }
    rows
}

/// Runs every algorithm on the same instances; failures are recorded, never fatal.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let groups = group_specs(&spec.algorithms);
    let jobs: Vec<(usize, usize)> = (spec.sparsity_min..=spec.sparsity_max)
        .flat_map(|k| (0..spec.trials).map(move |t| (k, t)))
        .collect();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(k, t)| run_trial(spec, &groups, k, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let records = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(SweepResult {
        description: spec.describe(),
        rows: aggregate(spec, &records),
        records,
    })
}

pub const CSV_HEADER: [&str; 6] = ["algorithm", "sparsity", "trials", "successes", "rate", "mean_seconds"];

/// CSV with an optional leading `# ` comment line carrying the configuration.
pub fn write_csv<W: Write>(r: &SweepResult, mut out: W) -> Result<()> {
    if !r.description.is_empty() {
        writeln!(out, "# {}", r.description)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &r.rows {
        let secs = row
            .mean_seconds
            .map(|s| format!("{s:.6}"))
            .unwrap_or_else(|| "NA".into());
        w.write_record([
            row.algorithm.clone(),
            row.sparsity.to_string(),
            row.trials.to_string(),
            row.successes.to_string(),
            row.rate.to_string(),
            secs,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the rows of [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<RateRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<usize> {
            field(i)
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad integer '{}'", field(i))))
        };
        rows.push(RateRow {
            algorithm: field(0).to_string(),
            sparsity: num(1)?,
            trials: num(2)?,
            successes: num(3)?,
            rate: field(4)
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad rate '{}'", field(4))))?,
            mean_seconds: field(5).parse().ok(),
        });
    }
    Ok(rows)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Static line chart of success rate against sparsity, one polyline per algorithm.
pub fn render_svg(r: &SweepResult) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let mut series: BTreeMap<usize, (&str, Vec<(usize, f64)>)> = BTreeMap::new();
    let mut order: Vec<&str> = Vec::new();
    for row in &r.rows {
        let pos = match order.iter().position(|a| *a == row.algorithm) {
            Some(p) => p,
            None => {
                order.push(&row.algorithm);
                order.len() - 1
            }
        };
        series
            .entry(pos)
            .or_insert_with(|| (&row.algorithm, Vec::new()))
            .1
            .push((row.sparsity, row.rate));
    }
    let kmin = r.rows.iter().map(|x| x.sparsity).min().unwrap_or(0) as f64;
    let kmax = r.rows.iter().map(|x| x.sparsity).max().unwrap_or(1) as f64;
    let span = (kmax - kmin).max(1.0);
    let sx = |k: f64| left + (k - kmin) / span * pw;
    let sy = |rate: f64| top + (1.0 - rate) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let rate = i as f64 / 5.0;
        let y = sy(rate);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{rate:.1}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    if !r.rows.is_empty() {
        let mut k = kmin as usize;
        while k as f64 <= kmax {
            let x = sx(k as f64);
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{k}</text>"#,
                top + ph + 16.0
            );
            k += 1;
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">sparsity</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">success rate</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, (name, pts)) in series.values().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(k, rate)| format!("{:.1},{:.1}", sx(k as f64), sy(rate)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `csv_path` and an SVG chart next to it; returns both paths.
pub fn emit_results(r: &SweepResult, csv_path: &Path) -> Result<(PathBuf, PathBuf)> {
    let f = File::create(csv_path)?;
    write_csv(r, BufWriter::new(f))?;
    let svg_path = csv_path.with_extension("svg");
    std::fs::write(&svg_path, render_svg(r))?;
    Ok((csv_path.to_path_buf(), svg_path))
}

/// On-disk instance layout; matrices are dense and row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b_mat: Vec<f64>,
    pub y: Vec<f64>,
    pub b: Vec<f64>,
    pub eps_noise: f64,
    #[serde(default)]
    pub x_star: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, x_star: Option<Vec<f64>>, seed: Option<u64>) -> Self {
        Self {
            m: inst.m(),
            n: inst.n(),
            l: inst.l(),
            a: inst.a().as_slice().to_vec(),
            b_mat: inst.bmat().as_slice().to_vec(),
            y: inst.y().to_vec(),
            b: inst.b().to_vec(),
            eps_noise: inst.eps_noise(),
            x_star,
            seed,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.a.len() != self.m * self.n {
            return Err(Error::Dimension(format!(
                "A has {} entries, expected {} x {}",
                self.a.len(),
                self.m,
                self.n
            )));
        }
        if self.b_mat.len() != self.l * self.n {
            return Err(Error::Dimension(format!(
                "B has {} entries, expected {} x {}",
                self.b_mat.len(),
                self.l,
                self.n
            )));
        }
        if let Some(x) = &self.x_star {
            if x.len() != self.n {
                return Err(Error::Dimension(format!("x_star has length {}", x.len())));
            }
        }
        Instance::new(
            Matrix::from_row_major(self.m, self.n, self.a.clone()),
            Matrix::from_row_major(self.l, self.n, self.b_mat.clone()),
            self.y.clone(),
            self.b.clone(),
            self.eps_noise,
        )
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    let f = File::open(path)?;
    let file: InstanceFile = serde_json::from_reader(std::io::BufReader::new(f))?;
    file.to_instance()?;
    Ok(file)
}

pub fn write_instance(file: &InstanceFile, path: &Path) -> Result<()> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, file)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
