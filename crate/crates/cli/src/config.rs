//! Flat `key = value` run configuration. Every run echoes its parsed
//! configuration verbatim into the output header, so a config file plus a
//! seed reproduces a byte-identical CSV body.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nonlocal_neumann::grid::Extension;
use nonlocal_neumann::measures::{DensityShape, LevyMeasure};
use nonlocal_neumann::nonlocal_op::SplitParams;
use nonlocal_neumann::reflect::ReflectionModel;
use nonlocal_neumann::solver::Problem;

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), reason: reason.into() }
}

const KNOWN_KEYS: &[&str] = &[
    "measure.alpha",
    "measure.g",
    "measure.g.value",
    "measure.g.intercept",
    "measure.g.slope",
    "measure.g.amplitude",
    "measure.g.rate",
    "measure.c_flag",
    "measure.dimension",
    "measure.tail_bound",
    "reflection",
    "grid.L",
    "grid.n",
    "grid.delta",
    "grid.tail_tol",
    "grid.extension",
    "solver.method",
    "solver.tol",
    "solver.max_iter",
    "solver.k",
    "solver.k_schedule",
    "solver.epsilon",
    "solver.r_trunc",
    "solver.normalized",
    "source.f",
    "sweep.alphas",
    "appendix.alphas",
    "appendix.blowup_r",
    "reflect.samples",
    "reflect.dimension",
    "holder.beta",
    "holder.window",
    "gamma.delta",
    "gamma.xs",
    "rng_seed",
];

/// Parsed configuration: raw pairs plus typed accessors.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pairs: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")));
            };
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(&key, "unknown key"));
            }
            pairs.insert(key, v.trim().to_string());
        }
        Ok(RunConfig { pairs })
    }

    /// Sorted `key=value` echo used in every output header.
    pub fn echo(&self) -> String {
        self.pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("; ")
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(|s| s.as_str())
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| err(key, format!("not a number: `{s}`"))),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64, ConfigError> {
        self.raw(key)
            .ok_or_else(|| err(key, "missing"))?
            .parse()
            .map_err(|_| err(key, "not a number"))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| err(key, format!("not an integer: `{s}`"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| err(key, format!("not an integer: `{s}`"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(s) => Err(err(key, format!("expected true/false, got `{s}`"))),
        }
    }

    pub fn list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| err(key, format!("bad list entry `{t}`"))))
                .collect(),
        }
    }

    pub fn list_usize(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| err(key, format!("bad list entry `{t}`"))))
                .collect(),
        }
    }

    pub fn density(&self) -> Result<DensityShape, ConfigError> {
        match self.raw("measure.g").unwrap_or("const") {
            "const" => Ok(DensityShape::Const { value: self.f64_or("measure.g.value", 1.0)? }),
            "affine" => Ok(DensityShape::Affine {
                intercept: self.f64_or("measure.g.intercept", 1.0)?,
                slope: self.f64_or("measure.g.slope", 1.0)?,
            }),
            "exp" => Ok(DensityShape::Exp {
                amplitude: self.f64_or("measure.g.amplitude", 1.0)?,
                rate: self.f64_or("measure.g.rate", 1.0)?,
            }),
            other => Err(err("measure.g", format!("unknown preset `{other}` (const|affine|exp)"))),
        }
    }

    pub fn measure(&self) -> Result<LevyMeasure, ConfigError> {
        let alpha = self.f64_req("measure.alpha")?;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(err("measure.alpha", format!("must lie strictly in (0, 2), got {alpha}")));
        }
        let dim = self.usize_or("measure.dimension", 1)?;
        let default_c = if alpha >= 1.0 { 1 } else { 0 };
        let c_flag = self.usize_or("measure.c_flag", default_c)? as u8;
        let g = self.density()?;
        let tail_bound = self.f64_or("measure.tail_bound", 2.0)?;
        LevyMeasure::new(dim, alpha, g, c_flag, tail_bound).map_err(|e| err("measure", e.to_string()))
    }

    pub fn model(&self) -> Result<ReflectionModel, ConfigError> {
        ReflectionModel::parse(self.raw("reflection").unwrap_or("censored")).map_err(|e| err("reflection", e.to_string()))
    }

    pub fn source(&self) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>, ConfigError> {
        let spec = self.raw("source.f").unwrap_or("const:0.0");
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| t.trim().parse().map_err(|_| err("source.f", format!("bad parameter `{t}`"))))
                .collect::<Result<_, _>>()?
        };
        let get = |i: usize, d: f64| nums.get(i).copied().unwrap_or(d);
        match kind {
            "const" => {
                let c = get(0, 0.0);
                Ok(Arc::new(move |_| c))
            }
            "cosine" => {
                let (a, w, off) = (get(0, 1.0), get(1, 1.0), get(2, 0.0));
                Ok(Arc::new(move |x| a * (w * x).cos() + off))
            }
            "expdecay" => {
                let (a, r, off) = (get(0, 1.0), get(1, 1.0), get(2, 0.0));
                Ok(Arc::new(move |x| a * (-r * x).exp() + off))
            }
            "gauss" => {
                let (a, c, w) = (get(0, 1.0), get(1, 1.0), get(2, 1.0));
                Ok(Arc::new(move |x| a * (-(x - c) * (x - c) / (2.0 * w * w)).exp()))
            }
            other => Err(err("source.f", format!("unknown preset `{other}` (const|cosine|expdecay|gauss)"))),
        }
    }

    pub fn extension(&self) -> Result<Extension, ConfigError> {
        match self.raw("grid.extension").unwrap_or("constant-at-L") {
            "constant-at-L" => Ok(Extension::ConstantAtEnd),
            s if s.starts_with("prescribed:") => {
                let v = s["prescribed:".len()..]
                    .parse()
                    .map_err(|_| err("grid.extension", "bad prescribed value"))?;
                Ok(Extension::Prescribed(v))
            }
            other => Err(err("grid.extension", format!("unknown policy `{other}`"))),
        }
    }

    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let length = self.f64_req("grid.L")?;
        let n = self.usize_or("grid.n", 201)?;
        if n < 8 {
            return Err(err("grid.n", "need at least 8 nodes"));
        }
        let measure = self.measure()?;
        let model = self.model()?;
        let source = self.source()?;
        let mut problem =
            Problem::new(measure, model, source, length, n).map_err(|e| err("grid", e.to_string()))?;
        let mut params = SplitParams::with_default_delta(length, n);
        if let Some(_d) = self.raw("grid.delta") {
            params.delta = self.f64_req("grid.delta")?;
        }
        params.tail_tol = self.f64_or("grid.tail_tol", 1e-6)?;
        problem.params = params;
        problem.extension = self.extension()?;
        problem.normalized = self.bool_or("solver.normalized", false)?;
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes_sorted() {
        let cfg = RunConfig::parse("grid.L = 8.0\nmeasure.alpha = 1.5\n# comment\nreflection = mirror\n").unwrap();
        assert_eq!(cfg.echo(), "grid.L=8.0; measure.alpha=1.5; reflection=mirror");
        assert_eq!(cfg.f64_req("grid.L").unwrap(), 8.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse("measure.alhpa = 1.0").unwrap_err();
        assert!(e.to_string().contains("measure.alhpa"));
    }

    #[test]
    fn alpha_out_of_range_is_named() {
        let cfg = RunConfig::parse("measure.alpha = 2.5\ngrid.L = 8").unwrap();
        let e = cfg.measure().unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
    }
}
