use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sparsekit::algorithms::{run_algorithm, sparsity};
use sparsekit::cone::{Backend, SolverSettings};
use sparsekit::duality::{
    complementarity_gap, kkt_check, strict_pair_central_path, strict_pair_construct, StrictPair,
};
use sparsekit::experiments::{
    emit_results, generate_instance, read_instance, run_sweep, write_instance, AlgorithmSpec, Case,
    Dims, InstanceFile, SweepSpec,
};
use sparsekit::modeling::{solve_weighted_l1, Instance};
use sparsekit::Error;

/// Tolerance used by `verify`; the gamma stationarity line needs a tight gap.
const VERIFY_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "sparsekit", version, about = "Sparse recovery by reweighted l1 minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Ipm,
    Admm,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Ipm => Backend::InteriorPoint,
            BackendArg::Admm => Backend::Admm,
        }
    }
}

#[derive(clap::Args)]
struct SolverArgs {
    /// Cone solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Cone solver backend.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Iteration cap for the cone solver.
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverArgs {
    fn settings(&self, default_tol: f64) -> SolverSettings {
        let mut s = SolverSettings {
            tol: self.tol.unwrap_or(default_tol),
            ..SolverSettings::default()
        };
        if let Some(b) = self.backend {
            s.backend = b.into();
        }
        if let Some(m) = self.max_iters {
            s.max_iters = m;
        }
        s
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with an algorithm or a fixed weight.
    Solve {
        /// Instance JSON file, or `example1` for the built-in fixture.
        instance: String,
        /// Algorithm with optional overrides, e.g. `dra6:k=3:alpha=1e-6`.
        #[arg(long, conflicts_with = "weight")]
        algorithm: Option<String>,
        /// Solve the weighted l1 problem with this weight, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weight: Option<Vec<f64>>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solution JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the solution JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// Run a recovery-rate sweep and write CSV plus SVG.
    Sweep {
        /// Sweep specification JSON; replaces the flags below.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// `n1`, `n2` or `m,n,l`.
        #[arg(long, default_value = "n1")]
        case: String,
        /// Inclusive sparsity range `a..b`.
        #[arg(long, default_value = "14..20")]
        sparsity: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Comma separated algorithm list, each entry as for `solve --algorithm`.
        #[arg(long, default_value = "l1,dra4,dra6")]
        algs: String,
        #[arg(long, default_value_t = 1e-4)]
        eps_noise: f64,
        #[arg(long, env = "SPARSEKIT_SEED", default_value_t = 0)]
        seed: u64,
        /// Redraw the noise until `|c1| <= 1` so that `x*` is feasible.
        #[arg(long)]
        reject_large_c1: bool,
        /// Record wall time per trial (makes the CSV nondeterministic).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// CSV output path; the SVG is written next to it.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check optimality conditions and build a strictly complementary pair.
    Verify {
        /// Instance JSON file, or `example1`.
        instance: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        weight: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        json: bool,
    },
    /// Draw a random instance and write it as JSON.
    Generate {
        /// `n1`, `n2` or `m,n,l`.
        #[arg(long, default_value = "n1")]
        case: String,
        #[arg(long)]
        sparsity: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps_noise: f64,
        #[arg(long, env = "SPARSEKIT_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        reject_large_c1: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_instance(name: &str) -> sparsekit::Result<(Instance, Option<Vec<f64>>)> {
    if name == "example1" {
        return Ok((Instance::example1(), None));
    }
    let file = read_instance(Path::new(name))?;
    Ok((file.to_instance()?, file.x_star))
}

fn parse_case(s: &str) -> sparsekit::Result<Case> {
    match s.to_ascii_lowercase().as_str() {
        "n1" => Ok(Case::N1),
        "n2" => Ok(Case::N2),
        other => {
            let v: Vec<usize> = other
                .split(',')
                .map(|p| p.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("bad case '{s}'")))?;
            match v[..] {
                [m, n, l] => Ok(Case::Custom { m, n, l }),
                _ => Err(Error::InvalidArgument(format!("case needs m,n,l, got '{s}'"))),
            }
        }
    }
}

fn parse_range(s: &str) -> sparsekit::Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("bad sparsity range '{s}', expected a..b"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a = a.trim().parse().map_err(|_| bad())?;
    let b = b.trim().parse().map_err(|_| bad())?;
    if a > b || a == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn one_based(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn write_json(path: &Path, v: &Value) -> sparsekit::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn cmd_solve(
    instance: &str,
    algorithm: Option<&str>,
    weight: Option<&[f64]>,
    settings: SolverSettings,
    out: Option<&Path>,
    as_json: bool,
) -> sparsekit::Result<()> {
    let (inst, _) = load_instance(instance)?;
    let (x, objective, config) = match weight {
        Some(w) => {
            let sol = solve_weighted_l1(&inst, w, &settings)?;
            let cfg = json!({"mode": "weighted_l1", "weight": w, "solver": settings});
            (sol.primal.x, sol.objective, cfg)
        }
        None => {
            let spec: AlgorithmSpec = algorithm.unwrap_or("l1").parse()?;
            let mut cfg = spec.config;
            cfg.solver = settings;
            let trace = run_algorithm(&inst, &cfg)?;
            if let Some(f) = &trace.failure {
                eprintln!("warning: run stopped early: {f}");
            }
            let obj = trace.iterates.last().map_or(0.0, |it| it.objective);
            let c = json!({"mode": "algorithm", "label": spec.label, "config": cfg, "solver": settings, "iterations": trace.iterates.len(), "failure": trace.failure});
            (trace.final_x, obj, c)
        }
    };
    let k = sparsity(&x, 1e-5);
    let residuals = json!({
        "measurement": inst.residual_norm(&x),
        "eps_noise": inst.eps_noise(),
        "infeasibility": inst.infeasibility(&x),
    });
    let doc = json!({
        "x": x,
        "sparsity": k,
        "objective": objective,
        "residuals": residuals,
        "config": config,
    });
    if let Some(p) = out {
        write_json(p, &doc)?;
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("x = {}", fmt_vec(&x));
        println!("sparsity = {k}");
        println!("objective = {objective:.8}");
        println!(
            "||y - Ax|| = {:.3e} (eps {:.3e}), infeasibility = {:.3e}",
            inst.residual_norm(&x),
            inst.eps_noise(),
            inst.infeasibility(&x)
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep_from_flags(
    case: &str,
    range: &str,
    trials: usize,
    algs: &str,
    eps_noise: f64,
    seed: u64,
    reject_large_c1: bool,
    timing: bool,
    threads: Option<usize>,
) -> sparsekit::Result<SweepSpec> {
    let (sparsity_min, sparsity_max) = parse_range(range)?;
    let algorithms = algs
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<sparsekit::Result<Vec<AlgorithmSpec>>>()?;
    Ok(SweepSpec {
        case: parse_case(case)?,
        sparsity_min,
        sparsity_max,
        trials,
        eps_noise,
        algorithms,
        seed,
        reject_large_c1,
        timing,
        threads,
    })
}

fn cmd_sweep(spec: &SweepSpec, out: &Path, as_json: bool) -> sparsekit::Result<()> {
    spec.validate()?;
    let res = run_sweep(spec)?;
    let (csv, svg) = emit_results(&res, out)?;
    if as_json {
        let v = json!({"csv": csv, "svg": svg, "description": res.description, "rows": res.rows});
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(());
    }
    println!("{}", res.description);
    for r in &res.rows {
        println!("{:<16} k={:<3} rate={:.3} ({}/{})", r.algorithm, r.sparsity, r.rate, r.successes, r.trials);
    }
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}

fn pair_json(sp: &StrictPair) -> Value {
    json!({
        "min_sum": sp.min_sum,
        "strict_tol": sp.strict_tol,
        "strict": sp.is_strict(),
        "p_star": sp.p_star.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "q_star": sp.q_star.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "z_star": sp.z_star,
        "gap": sp.gap,
    })
}

fn cmd_verify(
    instance: &str,
    w: &[f64],
    settings: SolverSettings,
    as_json: bool,
) -> sparsekit::Result<()> {
    let (inst, _) = load_instance(instance)?;
    let sol = solve_weighted_l1(&inst, w, &settings)?;
    let kkt = kkt_check(&inst, w, &sol.primal, &sol.dual);
    let comp = complementarity_gap(&sol.primal.x, &sol.dual.lam6)?;
    let pair = match strict_pair_construct(&inst, w, &settings) {
        Ok(sp) => Ok((sp, strict_pair_central_path(&inst, w, &settings)?)),
        Err(Error::Precondition(msg)) => Err(msg),
        Err(e) => return Err(e),
    };
    let mut doc = json!({
        "weight": w,
        "solver": settings,
        "x": sol.primal.x,
        "primal_objective": sol.objective,
        "dual_objective": sol.dual_objective,
        "kkt": kkt,
        "complementarity": {
            "gap": comp.gap,
            "support_x": comp.support_x,
            "support_lam6": comp.support_lam6,
            "n": comp.n,
            "within_bound": comp.within_bound(),
        },
    });
    match &pair {
        Ok((sp, cp)) => {
            doc["strict_pair"] = pair_json(sp);
            doc["central_path"] = pair_json(cp);
            doc["constructions_agree"] = json!(sp.p_star == cp.p_star && sp.q_star == cp.q_star);
        }
        Err(msg) => doc["strict_pair"] = json!({"precondition_failed": msg}),
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    println!("x = {}", fmt_vec(&sol.primal.x));
    println!("primal = {:.10}  dual = {:.10}", sol.objective, sol.dual_objective);
    println!(
        "KKT max residual = {:.3e} (linear lines {:.3e})",
        kkt.max_residual, kkt.max_linear_residual
    );
    println!(
        "complementarity: max |x_i| lam6_i = {:.3e}, ||x||_0 + ||lam6||_0 = {} + {} <= {}",
        comp.gap, comp.support_x, comp.support_lam6, comp.n
    );
    match &pair {
        Ok((sp, cp)) => {
            for (name, p) in [("strict pair", sp), ("central path", cp)] {
                println!(
                    "{name}: P* = {}, Q* = {}, min(t + lam6) = {:.3e} (tol {:.1e})",
                    one_based(&p.p_star),
                    one_based(&p.q_star),
                    p.min_sum,
                    p.strict_tol
                );
            }
            println!("constructions agree: {}", doc["constructions_agree"]);
        }
        Err(msg) => println!("strict pair: precondition failed: {msg}"),
    }
    Ok(())
}

fn cmd_generate(
    case: &str,
    k: usize,
    eps_noise: f64,
    seed: u64,
    reject_large_c1: bool,
    out: &Path,
) -> sparsekit::Result<()> {
    let Dims { m, n, l } = parse_case(case)?.dims();
    let g = generate_instance(Dims { m, n, l }, k, eps_noise, seed, reject_large_c1)?;
    let file = InstanceFile::from_instance(&g.instance, Some(g.x_star), Some(seed));
    write_instance(&file, out)?;
    println!("wrote {} ({m} x {n}, l = {l}, sparsity {k})", out.display());
    Ok(())
}

fn run(cli: Cli) -> sparsekit::Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            algorithm,
            weight,
            solver,
            out,
            json,
        } => cmd_solve(
            &instance,
            algorithm.as_deref(),
            weight.as_deref(),
            solver.settings(SolverSettings::default().tol),
            out.as_deref(),
            json,
        ),
        Command::Sweep {
            spec,
            case,
            sparsity,
            trials,
            algs,
            eps_noise,
            seed,
            reject_large_c1,
            timing,
            threads,
            out,
            json,
        } => {
            let spec = match spec {
                Some(p) => {
                    let text = fs::read_to_string(p)?;
                    serde_json::from_str(&text)?
                }
                None => sweep_from_flags(
                    &case,
                    &sparsity,
                    trials,
                    &algs,
                    eps_noise,
                    seed,
                    reject_large_c1,
                    timing,
                    threads,
                )?,
            };
            cmd_sweep(&spec, &out, json)
        }
        Command::Verify {
            instance,
            weight,
            solver,
            json,
        } => cmd_verify(&instance, &weight, solver.settings(VERIFY_TOL), json),
        Command::Generate {
            case,
            sparsity,
            eps_noise,
            seed,
            reject_large_c1,
            out,
        } => cmd_generate(&case, sparsity, eps_noise, seed, reject_large_c1, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
