//! Command-line entry point: solve, sweep and verification workflows with
//! reproducible config echoes and plot-ready CSV outputs.
//!
//! Exit status: 0 when every verdict passes, 1 when any verdict fails,
//! 2 on usage or configuration errors.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use nonlocal_neumann::certify;
use nonlocal_neumann::local_limit::alpha_sweep;
use nonlocal_neumann::reflect::{check_hypotheses, ReflectionModel};
use nonlocal_neumann::solver::{solve_direct, solve_limit, solve_truncated, solve_viscous, holder_quotient, SolveReport};

const TOOL: &str = concat!("nonlocal-neumann v", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "nonlocal-neumann", about = "Nonlocal Neumann half-line solvers and certified checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve u - I[u] = f and write solution.csv (x, u, residual)
    Solve {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Localization sweep over alpha for all four models -> sweep_alpha.csv
    SweepAlpha {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the certified integral battery -> appendix.csv
    VerifyAppendix {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Randomized audit of the jump-rule hypotheses -> reflections.csv
    CheckReflections {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compensator drift profile toward the boundary -> gamma_profile.csv
    GammaProfile {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Hölder quotient of a solved profile -> holder.csv
    Holder {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn load(path: &Path) -> Result<RunConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config `{}`: {e}", path.display()))?;
    RunConfig::parse(&text).map_err(|e| e.to_string())
}

fn write_csv(
    out_dir: &Path,
    name: &str,
    cfg: &RunConfig,
    report_lines: &[String],
    columns: &str,
    rows: &[Vec<String>],
) -> Result<(), String> {
    fs::create_dir_all(out_dir).map_err(|e| format!("cannot create `{}`: {e}", out_dir.display()))?;
    let mut text = String::new();
    text.push_str(&format!("# tool: {TOOL}\n"));
    text.push_str(&format!("# config: {}\n", cfg.echo()));
    for line in report_lines {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(columns);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = out_dir.join(name);
    fs::write(&path, text).map_err(|e| format!("cannot write `{}`: {e}", path.display()))
}

fn run_solve(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let problem = cfg.problem().map_err(|e| e.to_string())?;
    let tol = cfg.f64_or("solver.tol", 1e-10).map_err(|e| e.to_string())?;
    let rep: SolveReport = match cfg.str_or("solver.method", "direct").as_str() {
        "direct" => {
            let k = cfg.usize_or("solver.k", 0).map_err(|e| e.to_string())?;
            let trunc = if k == 0 { None } else { Some(k) };
            solve_direct(&problem, trunc).map_err(|e| e.to_string())?
        }
        "limit" => {
            let schedule = cfg.list_usize("solver.k_schedule", &[8, 16, 32, 64]).map_err(|e| e.to_string())?;
            solve_limit(&problem, &schedule, tol).map_err(|e| e.to_string())?
        }
        "truncated" => {
            let k = cfg.usize_or("solver.k", 32).map_err(|e| e.to_string())?;
            let max_iter = cfg.usize_or("solver.max_iter", 2_000_000).map_err(|e| e.to_string())?;
            solve_truncated(&problem, k, tol, max_iter, None).map_err(|e| e.to_string())?
        }
        "viscous" => {
            let eps = cfg.f64_or("solver.epsilon", 0.05).map_err(|e| e.to_string())?;
            let r_trunc = cfg.f64_or("solver.r_trunc", 100.0).map_err(|e| e.to_string())?;
            let k = cfg.usize_or("solver.k", 0).map_err(|e| e.to_string())?;
            let trunc = if k == 0 { None } else { Some(k) };
            solve_viscous(&problem, trunc, eps, r_trunc, tol).map_err(|e| e.to_string())?
        }
        other => return Err(format!("config key `solver.method`: unknown method `{other}`")),
    };
    let h = rep.solution.h();
    let rows: Vec<Vec<String>> = (0..rep.solution.n())
        .map(|i| {
            let r = rep.nodal_residual.get(i).copied().unwrap_or(f64::NAN);
            vec![num(i as f64 * h), num(rep.solution.values[i]), num(r)]
        })
        .collect();
    let report = vec![
        format!(
            "report: residual={} boundary_residual={} iterations={} contraction={} dominance={} tail_mass_beyond_half={}",
            num(rep.residual),
            num(rep.boundary_residual),
            rep.iterations,
            num(rep.contraction_factor),
            num(rep.dominance_margin),
            num(rep.tail_mass_beyond_half)
        ),
        format!(
            "schedule: k={:?} increments={:?} cauchy_warning={}",
            rep.k_schedule, rep.cauchy_increments, rep.cauchy_warning
        ),
    ];
    write_csv(out, "solution.csv", cfg, &report, "x,u,residual", &rows)?;
    Ok(true)
}

fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let mut problem = cfg.problem().map_err(|e| e.to_string())?;
    problem.normalized = true;
    let alphas = cfg.list_f64("sweep.alphas", &[1.5, 1.7, 1.9, 1.95]).map_err(|e| e.to_string())?;
    let tol = cfg.f64_or("solver.tol", 1e-10).map_err(|e| e.to_string())?;
    let table = alpha_sweep(&problem, &alphas, tol).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for r in &table.rows {
        rows.push(vec![
            num(r.alpha),
            r.model.name().to_string(),
            num(r.e_alpha),
            r.iterations.to_string(),
            num(r.residual),
        ]);
    }
    // verdict: every model's error decreases along the sweep and the
    // cross-model gap shrinks from the first to the last alpha
    let mut pass = table.rows.iter().all(|r| r.converged);
    for model in ReflectionModel::ALL {
        let es: Vec<f64> = table.rows.iter().filter(|r| r.model == model).map(|r| r.e_alpha).collect();
        if es.windows(2).any(|w| w[1] >= w[0]) {
            pass = false;
        }
    }
    if let (Some(first), Some(last)) = (table.cross_model_gaps.first(), table.cross_model_gaps.last()) {
        if last.1 >= first.1 {
            pass = false;
        }
    }
    let gaps = table
        .cross_model_gaps
        .iter()
        .map(|(a, g)| format!("{}:{}", num(*a), num(*g)))
        .collect::<Vec<_>>()
        .join(" ");
    let report =
        vec![format!("cross_model_gaps: {gaps}"), format!("verdict: {}", if pass { "pass" } else { "fail" })];
    write_csv(out, "sweep_alpha.csv", cfg, &report, "alpha,model,e_alpha,iterations,residual", &rows)?;
    Ok(pass)
}

fn run_appendix(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let alphas = cfg.list_f64("appendix.alphas", &[1.2, 1.5, 1.8]).map_err(|e| e.to_string())?;
    let blowup_r = cfg.f64_or("appendix.blowup_r", 4.0).map_err(|e| e.to_string())?;
    let a_grid = vec![1.01, 1.05, 1.1, 1.2, 1.35, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0, 20.0, 50.0];
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut pass = true;
    let push = |c: &certify::Certificate, rows: &mut Vec<Vec<String>>, pass: &mut bool| {
        rows.push(vec![
            c.name.clone(),
            num(c.value),
            num(c.error),
            if c.pass { "pass".into() } else { "fail".into() },
        ]);
        *pass &= c.pass;
    };

    for a in [0.2, 0.5, 0.8] {
        let c = certify::integral_j(a, 1).map_err(|e| e.to_string())?;
        push(&c, &mut rows, &mut pass);
    }
    {
        let msr = nonlocal_neumann::measures::LevyMeasure::stable_1d(0.5).map_err(|e| e.to_string())?;
        let grid: Vec<f64> = (0..=10).map(|j| 2.0_f64.powi(-j)).collect();
        let rep = certify::blowup_check(&msr, blowup_r, &grid).map_err(|e| e.to_string())?;
        push(&rep.certificate, &mut rows, &mut pass);
    }
    for &alpha in &alphas {
        let crit = alpha - 1.0;
        for beta in [crit, (crit + 0.1).min(0.99), (crit - 0.1).max(0.01)] {
            let c = certify::sign_exponent(alpha, beta).map_err(|e| e.to_string())?;
            push(&c, &mut rows, &mut pass);
        }
        let bg = certify::bg_bound(alpha, crit, &a_grid).map_err(|e| e.to_string())?;
        push(&bg.certificate, &mut rows, &mut pass);
        push(&bg.half_g_check, &mut rows, &mut pass);
        let bs = certify::beta_search(alpha, &a_grid).map_err(|e| e.to_string())?;
        let c = certify::Certificate {
            name: format!("beta_search(alpha={alpha})"),
            value: bs.found_beta,
            error: 0.0,
            pass: bs.pass,
            detail: String::new(),
        };
        push(&c, &mut rows, &mut pass);
    }
    {
        let msr = nonlocal_neumann::measures::LevyMeasure::stable_1d(1.5).map_err(|e| e.to_string())?;
        let prof = certify::gamma_profile(&msr, ReflectionModel::Censored, 1.0, &[0.1, 0.01, 0.001])
            .map_err(|e| e.to_string())?;
        let c = certify::Certificate {
            name: "gamma_blowup(alpha=1.5)".into(),
            value: prof.rows.last().map(|r| r.gamma).unwrap_or(f64::NAN),
            error: 0.0,
            pass: prof.pass,
            detail: String::new(),
        };
        push(&c, &mut rows, &mut pass);
    }
    let report = vec![format!("verdict: {}", if pass { "pass" } else { "fail" })];
    write_csv(out, "appendix.csv", cfg, &report, "claim,value,error,verdict", &rows)?;
    Ok(pass)
}

fn run_reflections(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let dim = cfg.usize_or("reflect.dimension", 2).map_err(|e| e.to_string())?;
    let samples = cfg.usize_or("reflect.samples", 100_000).map_err(|e| e.to_string())?;
    let seed = cfg.u64_or("rng_seed", 42).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut pass = true;
    for model in ReflectionModel::ALL {
        let rep = check_hypotheses(model, dim, samples, seed).map_err(|e| e.to_string())?;
        pass &= rep.all_expected_pass();
        for c in &rep.checks {
            rows.push(vec![
                model.name().to_string(),
                c.name.to_string(),
                if c.pass { "pass".into() } else { "fail".into() },
                num(c.worst_margin),
                num(rep.observed_c_eta),
            ]);
        }
    }
    let report = vec![format!("verdict: {}", if pass { "pass" } else { "fail" })];
    write_csv(out, "reflections.csv", cfg, &report, "model,hypothesis,status,worst_margin,observed_c_eta", &rows)?;
    Ok(pass)
}

fn run_gamma(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let msr = cfg.measure().map_err(|e| e.to_string())?;
    let model = cfg.model().map_err(|e| e.to_string())?;
    let delta = cfg.f64_or("gamma.delta", 1.0).map_err(|e| e.to_string())?;
    let xs = cfg.list_f64("gamma.xs", &[0.1, 0.01, 0.001]).map_err(|e| e.to_string())?;
    let prof = certify::gamma_profile(&msr, model, delta, &xs).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> = prof
        .rows
        .iter()
        .map(|r| {
            vec![num(r.x), num(r.gamma), r.closed_form.map(num).unwrap_or_default()]
        })
        .collect();
    let report = vec![format!("verdict: {}", if prof.pass { "pass" } else { "fail" })];
    write_csv(out, "gamma_profile.csv", cfg, &report, "x,gamma,closed_form", &rows)?;
    Ok(prof.pass)
}

fn run_holder(cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let problem = cfg.problem().map_err(|e| e.to_string())?;
    let beta = cfg.f64_or("holder.beta", 0.6).map_err(|e| e.to_string())?;
    let window = cfg.f64_or("holder.window", 1.0).map_err(|e| e.to_string())?;
    let rep = solve_direct(&problem, None).map_err(|e| e.to_string())?;
    let q = holder_quotient(&rep.solution, beta, window).map_err(|e| e.to_string())?;
    let rows = vec![vec![num(beta), num(window), num(q)]];
    let report = vec![format!("report: residual={} n={}", num(rep.residual), rep.solution.n())];
    write_csv(out, "holder.csv", cfg, &report, "beta,window,quotient", &rows)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg_path, out, runner): (&PathBuf, &PathBuf, fn(&RunConfig, &Path) -> Result<bool, String>) =
        match &cli.cmd {
            Cmd::Solve { config, out } => (config, out, run_solve),
            Cmd::SweepAlpha { config, out } => (config, out, run_sweep),
            Cmd::VerifyAppendix { config, out } => (config, out, run_appendix),
            Cmd::CheckReflections { config, out } => (config, out, run_reflections),
            Cmd::GammaProfile { config, out } => (config, out, run_gamma),
            Cmd::Holder { config, out } => (config, out, run_holder),
        };
    let cfg = match load(cfg_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match runner(&cfg, out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
