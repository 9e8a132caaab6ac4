//! Lévy measures of stable type: density `g(z) / |z|^(N+alpha)`, their
//! symmetric/non-symmetric split, inner-cutoff truncations, and the exact
//! kernel moments every quadrature in the crate is built on.

use crate::error::{Error, Result};
use crate::quad::power_moment;
use std::fmt;
use std::sync::Arc;

/// Number of geometric cells is capped; cells extend until the running sum
/// stops changing at this relative level.
const TAIL_REL_TOL: f64 = 1e-14;
const TAIL_MAX_CELLS: usize = 4000;
const TAIL_RATIO: f64 = 1.25;

/// Density numerator `g`. Presets match the config surface; `Custom` is for
/// library use.
#[derive(Clone)]
pub enum DensityShape {
    Const { value: f64 },
    /// `max(0, intercept + slope * z)`, one-dimensional.
    Affine { intercept: f64, slope: f64 },
    /// `amplitude * exp(-rate * |z|)`.
    Exp { amplitude: f64, rate: f64 },
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for DensityShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityShape::Const { value } => write!(f, "Const({value})"),
            DensityShape::Affine { intercept, slope } => write!(f, "Affine({intercept}, {slope})"),
            DensityShape::Exp { amplitude, rate } => write!(f, "Exp({amplitude}, {rate})"),
            DensityShape::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl DensityShape {
    pub fn eval(&self, z: &[f64]) -> f64 {
        match self {
            DensityShape::Const { value } => *value,
            DensityShape::Affine { intercept, slope } => (intercept + slope * z[0]).max(0.0),
            DensityShape::Exp { amplitude, rate } => {
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                amplitude * (-rate * r).exp()
            }
            DensityShape::Custom(f) => f(z),
        }
    }

    pub fn eval1(&self, z: f64) -> f64 {
        self.eval(&[z])
    }

    /// True when `g(z) = g(-z)` holds identically by construction.
    fn symmetric_by_shape(&self) -> bool {
        match self {
            DensityShape::Const { .. } | DensityShape::Exp { .. } => true,
            DensityShape::Affine { slope, .. } => *slope == 0.0,
            DensityShape::Custom(_) => false,
        }
    }
}

/// A Lévy measure with stable-type density `g(z)/|z|^(N+alpha)`.
///
/// `c_flag = 1` marks the strongly singular case (the symmetric part carries
/// a divergent first moment near the origin, which happens for `alpha >= 1`);
/// `c_flag = 0` the mild case `alpha < 1`. The pairing is enforced because
/// the compensator and boundary treatment downstream depend on it.
#[derive(Clone, Debug)]
pub struct LevyMeasure {
    pub dimension: usize,
    pub alpha: f64,
    pub g: DensityShape,
    pub c_flag: u8,
    pub tail_bound: f64,
}

impl LevyMeasure {
    pub fn new(dimension: usize, alpha: f64, g: DensityShape, c_flag: u8, tail_bound: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter { name: "dimension", reason: "must be >= 1".into() });
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must lie strictly inside (0, 2), got {alpha}"),
            });
        }
        if c_flag > 1 {
            return Err(Error::InvalidParameter { name: "c_flag", reason: "must be 0 or 1".into() });
        }
        if c_flag == 1 && alpha < 1.0 {
            return Err(Error::InvalidParameter {
                name: "c_flag",
                reason: format!("c = 1 needs a divergent small-jump first moment, i.e. alpha >= 1 (alpha = {alpha})"),
            });
        }
        if c_flag == 0 && alpha >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "c_flag",
                reason: format!("c = 0 needs integrable small jumps, i.e. alpha < 1 (alpha = {alpha})"),
            });
        }
        if let DensityShape::Affine { intercept, slope } = g {
            if dimension != 1 {
                return Err(Error::InvalidParameter { name: "g", reason: "affine preset is one-dimensional".into() });
            }
            if slope != 0.0 && alpha <= 1.0 {
                return Err(Error::InvalidParameter {
                    name: "g",
                    reason: "affine growth needs alpha > 1 for an integrable tail".into(),
                });
            }
            if intercept <= 0.0 {
                return Err(Error::InvalidParameter { name: "g", reason: "affine preset needs intercept > 0".into() });
            }
        }
        if tail_bound < 0.0 {
            return Err(Error::InvalidParameter { name: "tail_bound", reason: "must be nonnegative".into() });
        }
        Ok(Self { dimension, alpha, g, c_flag, tail_bound })
    }

    /// Stable measure with `g = 1` in one dimension; `c_flag` follows alpha.
    pub fn stable_1d(alpha: f64) -> Result<Self> {
        let c = if alpha >= 1.0 { 1 } else { 0 };
        Self::new(1, alpha, DensityShape::Const { value: 1.0 }, c, 1.0)
    }

    /// `g(z)/|z|^(N+alpha)`; the kernel is singular at `z = 0`.
    pub fn kernel_density(&self, z: &[f64]) -> Result<f64> {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        let r = r2.sqrt();
        Ok(self.g.eval(z) * r.powf(-(self.dimension as f64 + self.alpha)))
    }

    /// Symmetric/non-symmetric decomposition with `h(z) = min over the sphere
    /// of radius |z| of g`. One dimension uses the exact two-point minimum;
    /// higher dimensions sample `sphere_samples` directions.
    pub fn split(&self, sphere_samples: usize) -> Result<MeasureSplit> {
        if sphere_samples == 0 {
            return Err(Error::InvalidParameter { name: "sphere_samples", reason: "must be >= 1".into() });
        }
        Ok(MeasureSplit { measure: self.clone(), sphere_samples })
    }

    /// Restriction to `{|z| > 1/k}`.
    pub fn truncate(&self, k: usize) -> Result<TruncatedMeasure> {
        if k == 0 {
            return Err(Error::InvalidParameter { name: "k", reason: "must be >= 1".into() });
        }
        Ok(TruncatedMeasure { base: self.clone(), k })
    }

    /// `int_lo^hi z^order g(z) |z|^(-1-alpha) dz` with the power factor
    /// integrated exactly and `g` frozen at the cell midpoint (exact for
    /// constant `g`). One-dimensional. Intervals with 0 strictly inside are
    /// divergent for order < 2; an endpoint at 0 yields the improper value
    /// (possibly +inf).
    pub fn cell_moment(&self, lo: f64, hi: f64, order: u8) -> Result<f64> {
        if self.dimension != 1 {
            return Err(Error::InvalidParameter { name: "dimension", reason: "cell_moment is one-dimensional".into() });
        }
        if !(lo < hi) {
            return Err(Error::InvalidParameter { name: "interval", reason: format!("need lo < hi, got ({lo}, {hi})") });
        }
        if order > 2 {
            return Err(Error::InvalidParameter { name: "order", reason: "order must be 0, 1 or 2".into() });
        }
        if lo < 0.0 && hi > 0.0 {
            if order < 2 {
                return Err(Error::DivergentMoment { lo, hi, order });
            }
            return Ok(self.one_sided_moment(0.0, -lo, order, Side::Neg) + self.one_sided_moment(0.0, hi, order, Side::Pos));
        }
        if hi <= 0.0 {
            // map to the positive axis: z = -w
            let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
            return Ok(sign * self.one_sided_moment(-hi, -lo, order, Side::Neg));
        }
        Ok(self.one_sided_moment(lo, hi, order, Side::Pos))
    }

    fn one_sided_moment(&self, lo: f64, hi: f64, order: u8, side: Side) -> f64 {
        let mid = 0.5 * (lo + hi);
        let zmid = match side {
            Side::Pos => mid,
            Side::Neg => -mid,
        };
        self.g.eval1(zmid) * power_moment(lo, hi, order, self.alpha)
    }

    /// `int min(|z|^2, 1) d mu` — the defining Lévy integrability quantity.
    pub fn levy_moment(&self) -> Result<f64> {
        if self.dimension != 1 {
            return Err(Error::InvalidParameter { name: "dimension", reason: "levy_moment is one-dimensional".into() });
        }
        let inner = |side: Side| -> f64 {
            // geometric cells toward 0, closed by the improper innermost cell
            let mut total = 0.0;
            let mut hi = 1.0;
            for _ in 0..200 {
                let lo = hi / 2.0;
                total += self.one_sided_moment(lo, hi, 2, side);
                hi = lo;
                if hi < 1e-60 {
                    break;
                }
            }
            total + self.one_sided_moment(0.0, hi, 2, side)
        };
        let tail = self.side_tail_mass(1.0, Side::Pos) + self.side_tail_mass(1.0, Side::Neg);
        Ok(inner(Side::Pos) + inner(Side::Neg) + tail)
    }

    /// False only when `g(z) = g(-z)` is guaranteed by the preset shape, in
    /// which case the non-symmetric part of the split vanishes identically.
    pub(crate) fn possibly_asymmetric(&self) -> bool {
        !self.g.symmetric_by_shape()
    }

    /// Mass of one side beyond `w = cutoff`: `int_cutoff^inf g(+-w) w^(-1-alpha) dw`.
    pub(crate) fn side_tail_mass(&self, cutoff: f64, side: Side) -> f64 {
        debug_assert!(cutoff > 0.0);
        let a = self.alpha;
        match &self.g {
            DensityShape::Const { value } => value * cutoff.powf(-a) / a,
            DensityShape::Affine { intercept, slope } => {
                let s = match side {
                    Side::Pos => *slope,
                    Side::Neg => -*slope,
                };
                // g on this side is max(0, intercept + s*w)
                if s >= 0.0 {
                    // positive for all w >= cutoff (intercept >= 0 assumed by clipping at 0)
                    intercept * cutoff.powf(-a) / a + s * power_moment(cutoff, f64::INFINITY, 1, a)
                } else {
                    let root = -intercept / s;
                    if root <= cutoff {
                        0.0
                    } else {
                        intercept * power_moment(cutoff, root, 0, a) + s * power_moment(cutoff, root, 1, a)
                    }
                }
            }
            _ => {
                // geometric cells, one Gauss-Kronrod panel each, until the
                // increment is negligible
                let a = self.alpha;
                let f = |w: f64| {
                    let z = match side {
                        Side::Pos => w,
                        Side::Neg => -w,
                    };
                    self.g.eval1(z) * w.powf(-1.0 - a)
                };
                let mut total = 0.0;
                let mut lo = cutoff;
                for _ in 0..TAIL_MAX_CELLS {
                    let hi = lo * TAIL_RATIO;
                    let cell = crate::quad::fixed_panel(&f, lo, hi).value;
                    total += cell;
                    lo = hi;
                    if cell <= TAIL_REL_TOL * total.max(f64::MIN_POSITIVE) {
                        break;
                    }
                }
                total
            }
        }
    }

    /// First absolute moment of the symmetric part over `lo < |z| < hi`,
    /// i.e. `int |z| d mu*`. Grows without bound as `lo -> 0` iff alpha >= 1.
    pub fn star_abs_first_moment(&self, lo: f64, hi: f64) -> Result<f64> {
        if self.dimension != 1 {
            return Err(Error::InvalidParameter { name: "dimension", reason: "one-dimensional".into() });
        }
        if !(0.0 <= lo && lo < hi) {
            return Err(Error::InvalidParameter { name: "interval", reason: "need 0 <= lo < hi".into() });
        }
        let h = |w: f64| self.g.eval1(w).min(self.g.eval1(-w));
        let mut total = 0.0;
        let mut a = lo;
        let cells = 256;
        for i in 0..cells {
            let b = lo + (hi - lo) * (i + 1) as f64 / cells as f64;
            total += 2.0 * h(0.5 * (a + b)) * power_moment(a, b, 1, self.alpha);
            a = b;
        }
        Ok(total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Pos,
    Neg,
}

/// The split `mu = c mu* + mu#` with `h(z) = min_{|y|=|z|} g(y)`.
pub struct MeasureSplit {
    measure: LevyMeasure,
    sphere_samples: usize,
}

impl MeasureSplit {
    /// Symmetric minorant of `g` at `z` (exact in 1-d, sampled otherwise).
    pub fn h(&self, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        if r == 0.0 {
            return 0.0;
        }
        match self.measure.dimension {
            1 => self.measure.g.eval1(r).min(self.measure.g.eval1(-r)),
            2 => {
                let mut m = f64::INFINITY;
                for j in 0..self.sphere_samples {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / self.sphere_samples as f64;
                    m = m.min(self.measure.g.eval(&[r * th.cos(), r * th.sin()]));
                }
                m
            }
            n => {
                // spherical Fibonacci directions, deterministic
                let mut m = f64::INFINITY;
                let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
                for j in 0..self.sphere_samples {
                    let mut dir = vec![0.0; n];
                    let t = (j as f64 + 0.5) / self.sphere_samples as f64;
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 / golden).fract();
                    let cos_th = 1.0 - 2.0 * t;
                    let sin_th = (1.0 - cos_th * cos_th).sqrt();
                    dir[0] = sin_th * phi.cos();
                    dir[1] = sin_th * phi.sin();
                    dir[n - 1] = cos_th;
                    let zs: Vec<f64> = dir.iter().map(|d| d * r).collect();
                    m = m.min(self.measure.g.eval(&zs));
                }
                m
            }
        }
    }

    /// Density of `mu*`: `h(z)/|z|^(N+alpha)`.
    pub fn star_density(&self, z: &[f64]) -> Result<f64> {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        Ok(self.h(z) * r2.sqrt().powf(-(self.measure.dimension as f64 + self.measure.alpha)))
    }

    /// Density of `mu#`: `(g - h)(z)/|z|^(N+alpha)`, nonnegative.
    pub fn sharp_density(&self, z: &[f64]) -> Result<f64> {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::SingularAtOrigin);
        }
        let num = self.measure.g.eval(z) - self.h(z);
        Ok(num * r2.sqrt().powf(-(self.measure.dimension as f64 + self.measure.alpha)))
    }

    /// True when the sharp part vanishes identically by construction.
    pub fn sharp_is_zero(&self) -> bool {
        self.measure.g.symmetric_by_shape()
    }
}

/// `mu^k = mu` restricted to `{|z| > 1/k}`; bounded, so the equation with it
/// holds pointwise on the closed half-line.
#[derive(Clone, Debug)]
pub struct TruncatedMeasure {
    pub base: LevyMeasure,
    pub k: usize,
}

impl TruncatedMeasure {
    pub fn cutoff(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Total mass (one-dimensional). For `g = 1`: `2 k^alpha / alpha`.
    pub fn total_mass(&self) -> Result<f64> {
        if self.base.dimension != 1 {
            return Err(Error::InvalidParameter { name: "dimension", reason: "total_mass is one-dimensional".into() });
        }
        let c = self.cutoff();
        Ok(self.base.side_tail_mass(c, Side::Pos) + self.base.side_tail_mass(c, Side::Neg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable(alpha: f64) -> LevyMeasure {
        LevyMeasure::stable_1d(alpha).unwrap()
    }

    #[test]
    fn kernel_density_powers() {
        let m = stable(0.5);
        assert!((m.kernel_density(&[1.0]).unwrap() - 1.0).abs() < 1e-15);
        // |4|^(-(1+1/2)) = 1/8
        assert!((m.kernel_density(&[4.0]).unwrap() - 0.125).abs() < 1e-15);
        let m2 = LevyMeasure::new(2, 1.0, DensityShape::Const { value: 1.0 }, 1, 1.0).unwrap();
        assert!((m2.kernel_density(&[0.0, 2.0]).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(m.kernel_density(&[0.0]), Err(Error::SingularAtOrigin)));
    }

    #[test]
    fn alpha_range_is_open() {
        assert!(LevyMeasure::new(1, 0.0, DensityShape::Const { value: 1.0 }, 0, 1.0).is_err());
        assert!(LevyMeasure::new(1, 2.0, DensityShape::Const { value: 1.0 }, 1, 1.0).is_err());
        assert!(LevyMeasure::new(1, -0.3, DensityShape::Const { value: 1.0 }, 0, 1.0).is_err());
    }

    #[test]
    fn c_flag_matches_singularity() {
        assert!(LevyMeasure::new(1, 1.5, DensityShape::Const { value: 1.0 }, 0, 1.0).is_err());
        assert!(LevyMeasure::new(1, 0.5, DensityShape::Const { value: 1.0 }, 1, 1.0).is_err());
    }

    #[test]
    fn split_constant_g() {
        let m = stable(0.5);
        let s = m.split(1).unwrap();
        assert!((s.h(&[0.7]) - 1.0).abs() < 1e-15);
        assert_eq!(s.sharp_density(&[0.7]).unwrap(), 0.0);
        assert!(s.sharp_is_zero());
    }

    #[test]
    fn split_sign_density() {
        // g(z) = 2 + sign(z): h = 1, sharp numerator = 1 + sign(z)
        let g = DensityShape::Custom(Arc::new(|z: &[f64]| 2.0 + z[0].signum()));
        let m = LevyMeasure::new(1, 1.5, g, 1, 3.0).unwrap();
        let s = m.split(1).unwrap();
        for &z in &[0.3, 1.7, 5.0] {
            assert!((s.h(&[z]) - 1.0).abs() < 1e-15);
            let kern = z.powf(-2.5);
            assert!((s.sharp_density(&[z]).unwrap() - 2.0 * kern).abs() < 1e-12);
            assert!((s.sharp_density(&[-z]).unwrap() - 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_even_g_has_no_sharp_part() {
        let m = LevyMeasure::new(1, 0.5, DensityShape::Exp { amplitude: 1.0, rate: 1.0 }, 0, 1.0).unwrap();
        let s = m.split(1).unwrap();
        for &z in &[0.1, 0.9, 3.0] {
            assert!((s.h(&[z]) - (-z).exp().min((-z).exp())).abs() < 1e-15);
            assert_eq!(s.sharp_density(&[z]).unwrap(), 0.0);
        }
    }

    #[test]
    fn split_symmetry_sampled() {
        let g = DensityShape::Custom(Arc::new(|z: &[f64]| 1.0 + 0.5 * (z[0] * 3.0).sin()));
        let m = LevyMeasure::new(1, 1.5, g, 1, 2.0).unwrap();
        let s = m.split(1).unwrap();
        let mut worst: f64 = 0.0;
        for j in 1..200 {
            let z = j as f64 * 0.05;
            worst = worst.max((s.h(&[z]) - s.h(&[-z])).abs());
            assert!(s.sharp_density(&[z]).unwrap() >= 0.0);
            assert!(s.sharp_density(&[-z]).unwrap() >= 0.0);
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn truncated_mass_closed_form() {
        let m = stable(0.5);
        assert!((m.truncate(1).unwrap().total_mass().unwrap() - 4.0).abs() < 1e-12);
        assert!((m.truncate(4).unwrap().total_mass().unwrap() - 8.0).abs() < 1e-12);
        // monotone nondecreasing in k
        let mut prev = 0.0;
        for k in [1, 2, 4, 8, 16, 64] {
            let mass = m.truncate(k).unwrap().total_mass().unwrap();
            assert!(mass >= prev);
            prev = mass;
        }
    }

    #[test]
    fn cell_moment_examples() {
        let m = stable(0.5);
        let v = m.cell_moment(1.0, 2.0, 0).unwrap();
        assert!((v - (1.0 - 2.0_f64.powf(-0.5)) / 0.5).abs() < 1e-13);
        let v1 = m.cell_moment(-2.0, -1.0, 1).unwrap();
        assert!((v1 + (2.0_f64.powf(0.5) - 1.0) / 0.5).abs() < 1e-13);
        let v2 = m.cell_moment(-1.0, 1.0, 2).unwrap();
        assert!((v2 - 2.0 / 1.5).abs() < 1e-13);
        assert!(matches!(m.cell_moment(-1.0, 1.0, 0), Err(Error::DivergentMoment { .. })));
        assert!(matches!(m.cell_moment(-1.0, 1.0, 1), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn cell_moment_additivity() {
        let g = DensityShape::Const { value: 3.0 };
        let m = LevyMeasure::new(1, 0.7, g, 0, 3.0).unwrap();
        let whole = m.cell_moment(0.5, 2.5, 0).unwrap();
        let parts = m.cell_moment(0.5, 1.25, 0).unwrap() + m.cell_moment(1.25, 2.5, 0).unwrap();
        assert!((whole - parts).abs() <= 1e-13 * whole.abs());
    }

    #[test]
    fn levy_moment_finite() {
        for alpha in [0.3, 0.5, 1.2, 1.9] {
            let m = stable(alpha);
            let v = m.levy_moment().unwrap();
            // exact: 2/(2-alpha) + 2/alpha
            let exact = 2.0 / (2.0 - alpha) + 2.0 / alpha;
            assert!((v - exact).abs() < 1e-10 * exact, "alpha={alpha}: {v} vs {exact}");
        }
    }

    #[test]
    fn small_jump_first_moment_diverges_iff_alpha_ge_1() {
        let mild = stable(0.5);
        let strong = stable(1.5);
        let mut prev_mild = 0.0;
        let mut prev_strong = 0.0;
        for k in [10.0, 100.0, 1000.0, 10000.0] {
            prev_mild = mild.star_abs_first_moment(1.0 / k, 1.0).unwrap();
            prev_strong = strong.star_abs_first_moment(1.0 / k, 1.0).unwrap();
        }
        // closed forms: 2(1-k^(a-1))/(1-a) bounded for a<1; 2(k^(a-1)-1)/(a-1) -> inf for a>1
        assert!(prev_mild < 2.0 / 0.5 + 0.1);
        assert!(prev_strong > 100.0);
    }

    #[test]
    fn exp_tail_mass_matches_quadrature() {
        let m = LevyMeasure::new(1, 0.5, DensityShape::Exp { amplitude: 2.0, rate: 1.0 }, 0, 2.0).unwrap();
        let got = m.side_tail_mass(1.0, Side::Pos);
        let reference = crate::quad::adaptive(&|w: f64| 2.0 * (-w).exp() * w.powf(-1.5), 1.0, 60.0, 1e-12);
        assert!((got - reference.value).abs() < 1e-6, "{got} vs {}", reference.value);
    }
}
