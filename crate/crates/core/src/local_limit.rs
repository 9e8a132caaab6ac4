//! The local Neumann problem that the normalized nonlocal models approach as
//! the stability index tends to 2, the coefficient formulas, the
//! measure-concentration masses, and the sweep comparing nonlocal and local
//! solutions.

use crate::error::{Error, Result};
use crate::grid::{Extension, GridFunction};
use crate::measures::{DensityShape, LevyMeasure};
use crate::quad::power_moment;
use crate::reflect::ReflectionModel;
use crate::solver::{solve_direct, Problem};

/// Surface area of the unit sphere in R^N (`2, 2pi, 4pi, ...`).
pub fn sphere_surface(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (n as f64 - 2.0) * sphere_surface(n - 2),
    }
}

/// Concentration constants `a = g(0) |S^{N-1}|/N`, `b = Dg(0) |S^{N-1}|/N`.
///
/// These are the masses the rescaled quadratic and drift measures
/// concentrate to. Note the limiting PDE reads `-(a/2) Lap u - b . Du + u = f`:
/// the second-order Taylor factor 1/2 applies to `a` but not to `b`.
#[derive(Clone, Debug)]
pub struct LocalCoefficients {
    pub a: f64,
    pub b: Vec<f64>,
}

impl LocalCoefficients {
    pub fn b1(&self) -> f64 {
        self.b[0]
    }

    /// Diffusion coefficient of the limit PDE.
    pub fn diffusion(&self) -> f64 {
        0.5 * self.a
    }
}

/// `a`, `b` from a density numerator with a derivative at the origin
/// (symmetric finite differences; exact for the presets).
pub fn local_coefficients(g: &DensityShape, n_dim: usize) -> Result<LocalCoefficients> {
    if n_dim == 0 {
        return Err(Error::InvalidParameter { name: "dimension", reason: "must be >= 1".into() });
    }
    let origin = vec![0.0; n_dim];
    let g0 = g.eval(&origin);
    if !(g0 > 0.0) {
        return Err(Error::InvalidParameter { name: "g", reason: format!("need g(0) > 0, got {g0}") });
    }
    let factor = sphere_surface(n_dim) / n_dim as f64;
    let mut b = vec![0.0; n_dim];
    let eps = 1e-6;
    for (i, bi) in b.iter_mut().enumerate() {
        let mut zp = vec![0.0; n_dim];
        let mut zm = vec![0.0; n_dim];
        zp[i] = eps;
        zm[i] = -eps;
        *bi = factor * (g.eval(&zp) - g.eval(&zm)) / (2.0 * eps);
    }
    Ok(LocalCoefficients { a: g0 * factor, b })
}

/// Masses of the rescaled measures concentrating at the origin:
/// `nu1 = (2-alpha) int_{|z|<delta} z_i z_j g(z)|z|^(-N-alpha) dz` (diagonal
/// entries and the largest off-diagonal) and the drift mass with numerator
/// `g(z) - g(0)`.
#[derive(Clone, Debug)]
pub struct ConcentrationMasses {
    pub nu1_diag: Vec<f64>,
    pub nu1_offdiag_max: f64,
    pub nu2: Vec<f64>,
}

pub fn measure_concentration(g: &DensityShape, alpha: f64, delta: f64, n_dim: usize) -> Result<ConcentrationMasses> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter { name: "alpha", reason: "must lie in (0, 2)".into() });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter { name: "delta", reason: "must be positive".into() });
    }
    let norm = 2.0 - alpha;
    match n_dim {
        1 => {
            let g0 = g.eval1(0.0);
            // second moment: geometric cells toward the origin, exact power factor
            let mut nu1 = 0.0;
            let mut nu2 = 0.0;
            let mut hi = delta;
            for _ in 0..220 {
                let lo = hi / 2.0;
                let zm = 0.5 * (lo + hi);
                let m2 = power_moment(lo, hi, 2, alpha);
                nu1 += (g.eval1(zm) + g.eval1(-zm)) * m2;
                // odd first moment with numerator g - g(0): regularize by /z
                nu2 += ((g.eval1(zm) - g.eval1(-zm)) / zm) * m2;
                hi = lo;
                if hi < 1e-80 {
                    break;
                }
            }
            // improper innermost cell closes the second moment exactly
            let zm = 0.5 * hi;
            nu1 += (g.eval1(zm) + g.eval1(-zm)) * power_moment(0.0, hi, 2, alpha);
            let _ = g0;
            Ok(ConcentrationMasses { nu1_diag: vec![norm * nu1], nu1_offdiag_max: 0.0, nu2: vec![norm * nu2] })
        }
        2 => {
            let g0 = g.eval(&[0.0, 0.0]);
            let m_ang = 512usize;
            let mut diag = vec![0.0; 2];
            let mut off: f64 = 0.0;
            let mut nu2 = vec![0.0; 2];
            // radial geometric cells x angular trapezoid
            let mut hi = delta;
            for j in 0..220 {
                let lo = if j == 219 || hi < 1e-80 { 0.0 } else { hi / 2.0 };
                let rm = 0.5 * (lo + hi);
                let m2 = power_moment(lo, hi, 2, alpha); // int r^{1-alpha} after the polar factor r^{N-1}/r^{N+alpha}
                let mut a11 = 0.0;
                let mut a22 = 0.0;
                let mut a12 = 0.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for k in 0..m_ang {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / m_ang as f64;
                    let (c, s) = (th.cos(), th.sin());
                    let gv = g.eval(&[rm * c, rm * s]);
                    a11 += c * c * gv;
                    a22 += s * s * gv;
                    a12 += c * s * gv;
                    d1 += c * (gv - g0) / rm;
                    d2 += s * (gv - g0) / rm;
                }
                let w = 2.0 * std::f64::consts::PI / m_ang as f64;
                diag[0] += a11 * w * m2;
                diag[1] += a22 * w * m2;
                off = off.max((a12 * w * m2).abs());
                nu2[0] += d1 * w * m2;
                nu2[1] += d2 * w * m2;
                hi = lo;
                if hi == 0.0 {
                    break;
                }
            }
            Ok(ConcentrationMasses {
                nu1_diag: diag.iter().map(|v| norm * v).collect(),
                nu1_offdiag_max: norm * off,
                nu2: nu2.iter().map(|v| norm * v).collect(),
            })
        }
        _ => Err(Error::InvalidParameter { name: "dimension", reason: "concentration masses implemented for N <= 2".into() }),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LocalSolveInfo {
    /// True when the drift term was upwinded (cell Péclet number > 1).
    pub upwinded: bool,
}

/// Solves `-diffusion u'' - drift u' + u = f` on `[0, L]` with homogeneous
/// Neumann closures at both ends (ghost nodes, second order); tridiagonal
/// elimination.
pub fn solve_local_neumann(
    diffusion: f64,
    drift: f64,
    f: &dyn Fn(f64) -> f64,
    length: f64,
    n: usize,
) -> Result<(GridFunction, LocalSolveInfo)> {
    if !(diffusion > 0.0) {
        return Err(Error::InvalidParameter { name: "a", reason: "diffusion must be positive".into() });
    }
    if n < 3 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least 3 nodes".into() });
    }
    let h = length / (n - 1) as f64;
    let c = diffusion / (h * h);
    let peclet = drift.abs() * h / (2.0 * diffusion);
    let upwinded = peclet > 1.0;

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();

    diag[0] = 1.0 + 2.0 * c;
    upper[0] = -2.0 * c;
    diag[n - 1] = 1.0 + 2.0 * c;
    lower[n - 1] = -2.0 * c;
    for i in 1..n - 1 {
        if !upwinded {
            lower[i] = -c + drift / (2.0 * h);
            diag[i] = 1.0 + 2.0 * c;
            upper[i] = -c - drift / (2.0 * h);
        } else if drift > 0.0 {
            // -drift u' with forward difference keeps the M-matrix structure
            lower[i] = -c;
            diag[i] = 1.0 + 2.0 * c + drift / h;
            upper[i] = -c - drift / h;
        } else {
            lower[i] = -c + drift / h;
            diag[i] = 1.0 + 2.0 * c - drift / h;
            upper[i] = -c;
        }
    }

    // Thomas elimination
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
    }
    Ok((GridFunction { length, values: u, extension: Extension::ConstantAtEnd }, LocalSolveInfo { upwinded }))
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub model: ReflectionModel,
    pub e_alpha: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Largest pairwise gap between the four model solutions per alpha,
    /// measured on the comparison window.
    pub cross_model_gaps: Vec<(f64, f64)>,
    pub local_solution: GridFunction,
}

/// Solves the normalized nonlocal problem for every model and every alpha in
/// the sweep, compares against the local Neumann solution on `[0, 0.8 L]`
/// (the far closure differs between the two solvers), and tabulates
/// `e_alpha = max |u_alpha - u_local|` there.
pub fn alpha_sweep(template: &Problem, alphas: &[f64], tol: f64) -> Result<SweepTable> {
    if !template.normalized {
        return Err(Error::InvalidParameter {
            name: "normalized",
            reason: "the sweep needs the (2 - alpha)-normalized problem".into(),
        });
    }
    let coeffs = local_coefficients(&template.measure.g, 1)?;
    let src = template.source.clone();
    let (local, _) = solve_local_neumann(coeffs.diffusion(), coeffs.b1(), &*src, template.length, template.n)?;
    let window = (0.8 * (template.n - 1) as f64) as usize;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for &alpha in alphas {
        let c_flag = if alpha >= 1.0 { 1 } else { 0 };
        let measure = LevyMeasure::new(1, alpha, template.measure.g.clone(), c_flag, template.measure.tail_bound)?;
        let mut solutions: Vec<(ReflectionModel, GridFunction)> = Vec::new();
        for model in ReflectionModel::ALL {
            let mut p = template.clone();
            p.measure = measure.clone();
            p.model = model;
            match solve_direct(&p, None) {
                Ok(rep) => {
                    let e = (0..=window)
                        .map(|i| (rep.solution.values[i] - local.values[i]).abs())
                        .fold(0.0, f64::max);
                    rows.push(SweepRow {
                        alpha,
                        model,
                        e_alpha: e,
                        iterations: rep.iterations,
                        residual: rep.residual,
                        converged: true,
                    });
                    solutions.push((model, rep.solution));
                }
                Err(_) => {
                    rows.push(SweepRow { alpha, model, e_alpha: f64::NAN, iterations: 0, residual: f64::NAN, converged: false });
                }
            }
        }
        let mut gap: f64 = 0.0;
        for i in 0..solutions.len() {
            for j in (i + 1)..solutions.len() {
                let g = (0..=window)
                    .map(|q| (solutions[i].1.values[q] - solutions[j].1.values[q]).abs())
                    .fold(0.0, f64::max);
                gap = gap.max(g);
            }
        }
        gaps.push((alpha, gap));
    }
    let _ = tol;
    Ok(SweepTable { rows, cross_model_gaps: gaps, local_solution: local })
}
