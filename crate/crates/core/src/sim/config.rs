use std::fmt::Write as _;

use crate::dist::{EllipticalModel, Family};
use crate::error::{Error, Result};
use crate::estimation::Subdata;
use crate::linalg::CovSpec;
use crate::select::Method;

/// A simulation scenario. Parsed from flat `key = value` text; `#` starts a
/// comment.
///
/// | key | meaning | default |
/// |---|---|---|
/// | `family` | `normal` or `t` | `normal` |
/// | `nu` | t degrees of freedom | `3` |
/// | `d` | covariate dimension | `50` |
/// | `rho` | compound-symmetry correlation | `0` |
/// | `k` | subsample size | `1000` |
/// | `n_list` | comma-separated full-data sizes | `1000,10000,100000,1000000` |
/// | `methods` | subset of `full,dopt,dopt-s,iboss,unif` | all five |
/// | `replicates` (or `V`) | replicates per `n` | `200` |
/// | `seed` | 64-bit seed | `1` |
/// | `sigma_eps` | error standard deviation | `1` |
/// | `timing` | record wall-clock times | `true` |
/// | `mse_d_list` | dimensions for the MSE study; empty skips it | empty |
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub d: usize,
    pub rho: f64,
    pub k: usize,
    pub n_list: Vec<usize>,
    pub methods: Vec<Subdata>,
    pub replicates: usize,
    pub seed: u64,
    pub sigma_eps: f64,
    /// With `false`, timing columns are written as zero so outputs are
    /// byte-identical across runs.
    pub timing: bool,
    pub mse_d_list: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Normal,
            d: 50,
            rho: 0.0,
            k: 1000,
            n_list: vec![1_000, 10_000, 100_000, 1_000_000],
            methods: vec![
                Subdata::Full,
                Subdata::Select(Method::DOpt),
                Subdata::Select(Method::DOptSimplified),
                Subdata::Select(Method::Iboss),
                Subdata::Select(Method::Uniform),
            ],
            replicates: 200,
            seed: 1,
            sigma_eps: 1.0,
            timing: true,
            mse_d_list: Vec::new(),
        }
    }
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

/// Integer count, also accepting forms like `1e6`.
pub fn parse_count(s: &str) -> Option<usize> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 1e18).then_some(v as usize)
}

fn parse_list<T>(value: &str, line: usize, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| config_err(line, format!("cannot parse list entry {s:?}"))))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut family_name = "normal".to_string();
        let mut nu = 3.0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| config_err(line, format!("{key}: cannot parse {v:?} as a number")))
            };
            let count = |v: &str| -> Result<usize> {
                parse_count(v).ok_or_else(|| config_err(line, format!("{key}: cannot parse {v:?} as a count")))
            };
            match key {
                "family" => family_name = value.to_ascii_lowercase(),
                "nu" => nu = num(value)?,
                "d" => cfg.d = count(value)?,
                "rho" => cfg.rho = num(value)?,
                "k" => cfg.k = count(value)?,
                "n_list" => cfg.n_list = parse_list(value, line, parse_count)?,
                "methods" => cfg.methods = parse_list(value, line, |s| s.parse().ok())?,
                "replicates" | "V" => cfg.replicates = count(value)?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| config_err(line, format!("seed: cannot parse {value:?}")))?
                }
                "sigma_eps" => cfg.sigma_eps = num(value)?,
                "timing" => {
                    cfg.timing = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(config_err(line, format!("timing: expected true or false, got {value:?}"))),
                    }
                }
                "mse_d_list" => cfg.mse_d_list = parse_list(value, line, parse_count)?,
                other => return Err(config_err(line, format!("unknown key {other:?}"))),
            }
        }
        cfg.family = match family_name.as_str() {
            "normal" => Family::Normal,
            "t" | "student-t" | "studentt" => Family::StudentT { nu },
            other => return Err(Error::Config(format!("unknown family {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; [`ExperimentConfig::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self.family {
            Family::Normal => s.push_str("family = normal\n"),
            Family::StudentT { nu } => {
                let _ = writeln!(s, "family = t\nnu = {nu}");
            }
        }
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "n_list = {}", join(&self.n_list));
        let methods: Vec<&str> = self.methods.iter().map(Subdata::name).collect();
        let _ = writeln!(s, "methods = {}", methods.join(","));
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sigma_eps = {}", self.sigma_eps);
        let _ = writeln!(s, "timing = {}", self.timing);
        let _ = writeln!(s, "mse_d_list = {}", join(&self.mse_d_list));
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods is empty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        let min_n = *self.n_list.iter().min().expect("nonempty");
        if self.k > min_n {
            return Err(Error::Config(format!("k = {} exceeds the smallest n = {min_n}", self.k)));
        }
        if self.k < self.d + 1 {
            return Err(Error::Config(format!("k = {} is below d + 1 = {}", self.k, self.d + 1)));
        }
        if self.methods.contains(&Subdata::Select(Method::Iboss)) && self.k < 2 * self.d {
            return Err(Error::Config(format!("iboss needs k >= 2d = {}", 2 * self.d)));
        }
        if self.methods.contains(&Subdata::Select(Method::Leverage)) {
            return Err(Error::Config("leverage selection is not a simulation method".into()));
        }
        if !(self.sigma_eps >= 0.0) || !self.sigma_eps.is_finite() {
            return Err(Error::Config(format!("sigma_eps must be non-negative, got {}", self.sigma_eps)));
        }
        if self.mse_d_list.contains(&0) {
            return Err(Error::Config("mse_d_list entries must be positive".into()));
        }
        self.cov().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn cov(&self) -> Result<CovSpec> {
        if self.rho == 0.0 {
            Ok(CovSpec::identity(self.d))
        } else {
            CovSpec::compound_symmetry(self.d, self.rho)
        }
    }

    pub fn model(&self) -> Result<EllipticalModel> {
        EllipticalModel::new(self.family, self.cov()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# desk run\nfamily = t\nd = 5\nrho=0.5\nk = 100\nn_list = 1e3, 1e4\nmethods = full,dopt,unif\nV = 3\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.family, Family::StudentT { nu: 3.0 });
        assert_eq!(cfg.n_list, vec![1000, 10_000]);
        assert_eq!(cfg.replicates, 3);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("d = 2\nk = 5000\nn_list = 1000").is_err());
        assert!(ExperimentConfig::parse("d = 3\nrho = 1.5\nk=10\nn_list=100").is_err());
        assert!(ExperimentConfig::parse("d = 2\nk = 10\nn_list = 100\nV = 0").is_err());
        assert!(ExperimentConfig::parse("d = x").is_err());
    }
}
