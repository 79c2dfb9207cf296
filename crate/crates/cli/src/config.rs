//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use bpre::envmodel::{Family, Noise};
use bpre::perpetuity::ScalarLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Gf,
    Population,
    Both,
}

impl Estimator {
    pub fn runs(self) -> &'static [&'static str] {
        match self {
            Estimator::Gf => &["gf"],
            Estimator::Population => &["population"],
            Estimator::Both => &["gf", "population"],
        }
    }
}

/// How the environmental variance is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spread {
    /// `nu = rho * eps` at every `eps`.
    Rho(f64),
    Nu(f64),
}

impl Spread {
    pub fn nu_at(self, eps: f64) -> f64 {
        match self {
            Spread::Rho(rho) => rho * eps,
            Spread::Nu(nu) => nu,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub noise: Noise,
    pub eps_list: Vec<f64>,
    pub spread: Option<Spread>,
    pub n_reps: u64,
    pub seed: u64,
    pub estimator: Estimator,
    pub out: Option<PathBuf>,
    pub tol_q: f64,
    pub tol_mu: f64,
    pub n_max: usize,
    pub cap_multiplier: f64,
    pub n_samples: usize,
    /// Independent `(A, B)` laws for the perpetuity command.
    pub independent: Option<(ScalarLaw, ScalarLaw)>,
}

const KEYS: &[&str] = &[
    "family",
    "p0",
    "template",
    "noise",
    "epsilon",
    "eps_list",
    "rho",
    "nu",
    "n_reps",
    "seed",
    "estimator",
    "out",
    "tol_q",
    "tol_mu",
    "n_max",
    "cap_multiplier",
    "n_samples",
    "a",
    "b",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_document(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_assignment(line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        map.insert(k, v);
    }
    Ok(map)
}

pub fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key = value, got '{s}'"))?;
    let key = k.trim().to_string();
    if !KEYS.contains(&key.as_str()) {
        return Err(format!("unknown key '{key}'"));
    }
    Ok((key, v.trim().to_string()))
}

fn parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, String> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| format!("{key}: cannot parse '{v}'"))
        })
        .transpose()
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("{key}: cannot parse '{x}'"))
        })
        .collect()
}

fn parse_scalar_law(key: &str, v: &str) -> Result<ScalarLaw, String> {
    match parse_list(key, v)?.as_slice() {
        [c] => Ok(ScalarLaw::Constant(*c)),
        [lo, hi] => Ok(ScalarLaw::TwoPoint(*lo, *hi)),
        _ => Err(format!(
            "{key}: expected one value or two comma-separated values"
        )),
    }
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let family = match map.get("family").map(String::as_str).unwrap_or("poisson") {
            "poisson" => Family::Poisson,
            "linear_fractional" => Family::LinearFractional {
                p0: parse(map, "p0")?.ok_or("p0: required for the linear_fractional family")?,
            },
            "finite" => Family::Finite {
                template: parse_list(
                    "template",
                    map.get("template")
                        .ok_or("template: required for the finite family")?,
                )?,
            },
            other => return Err(format!("family: unknown family '{other}'")),
        };
        let noise = match map.get("noise") {
            Some(v) => v.parse::<Noise>().map_err(|e| format!("noise: {e}"))?,
            None => Noise::TwoPoint,
        };
        let eps_list = match (map.get("epsilon"), map.get("eps_list")) {
            (Some(_), Some(_)) => return Err("epsilon: give either epsilon or eps_list".into()),
            (Some(v), None) => parse_list("epsilon", v)?,
            (None, Some(v)) => parse_list("eps_list", v)?,
            (None, None) => Vec::new(),
        };
        if map.contains_key("epsilon") && eps_list.len() != 1 {
            return Err("epsilon: expected a single value".into());
        }
        let spread = match (parse::<f64>(map, "rho")?, parse::<f64>(map, "nu")?) {
            (Some(_), Some(_)) => return Err("rho: give either rho or nu".into()),
            (Some(r), None) => Some(Spread::Rho(r)),
            (None, Some(n)) => Some(Spread::Nu(n)),
            (None, None) => None,
        };
        let estimator = match map.get("estimator").map(String::as_str).unwrap_or("gf") {
            "gf" => Estimator::Gf,
            "population" => Estimator::Population,
            "both" => Estimator::Both,
            other => return Err(format!("estimator: unknown estimator '{other}'")),
        };
        let independent = match (map.get("a"), map.get("b")) {
            (Some(a), Some(b)) => Some((parse_scalar_law("a", a)?, parse_scalar_law("b", b)?)),
            (None, None) => None,
            _ => return Err("a: the laws a and b must be given together".into()),
        };
        Ok(Self {
            family,
            noise,
            eps_list,
            spread,
            n_reps: parse(map, "n_reps")?.unwrap_or(10_000),
            seed: parse(map, "seed")?.ok_or("seed: required")?,
            estimator,
            out: map.get("out").map(PathBuf::from),
            tol_q: parse(map, "tol_q")?.unwrap_or(1e-8),
            tol_mu: parse(map, "tol_mu")?.unwrap_or(1e-6),
            n_max: parse(map, "n_max")?.unwrap_or(100_000),
            cap_multiplier: parse(map, "cap_multiplier")?.unwrap_or(50.0),
            n_samples: parse(map, "n_samples")?.unwrap_or(10_000),
            independent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Result<ExperimentConfig, String> {
        ExperimentConfig::from_map(&parse_document(text)?)
    }

    #[test]
    fn parses_a_sweep() {
        let c = config(
            "# case ii\nfamily = linear_fractional\np0 = 0.5\neps_list = 0.05, 0.02\nrho = 1\nseed = 7\nestimator = both\n",
        )
        .unwrap();
        assert_eq!(c.family, Family::LinearFractional { p0: 0.5 });
        assert_eq!(c.eps_list, vec![0.05, 0.02]);
        assert_eq!(c.spread, Some(Spread::Rho(1.0)));
        assert_eq!(c.estimator, Estimator::Both);
        assert_eq!(c.n_reps, 10_000);
    }

    #[test]
    fn errors_name_the_field() {
        assert!(config("epsilon = 0.1\n").unwrap_err().contains("seed"));
        assert!(config("seed = 1\nbogus = 2\n")
            .unwrap_err()
            .contains("bogus"));
        assert!(config("seed = 1\nrho = 1\nnu = 1\n")
            .unwrap_err()
            .contains("rho"));
        assert!(config("seed = 1\nfamily = linear_fractional\n")
            .unwrap_err()
            .contains("p0"));
        assert!(config("seed = x\n").unwrap_err().contains("seed"));
    }

    #[test]
    fn scalar_laws() {
        let c = config("seed = 1\na = 1\nb = 0.3, 0.9\n").unwrap();
        assert_eq!(
            c.independent,
            Some((ScalarLaw::Constant(1.0), ScalarLaw::TwoPoint(0.3, 0.9)))
        );
    }
}
