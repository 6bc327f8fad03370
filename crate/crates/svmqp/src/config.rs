use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Where training (and optionally test) points come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Halfmoon { d: usize, delta: f64, n: usize },
    Checkerboard { n: usize },
    /// Errors are measured on `test` if given, else on the training set.
    File { train: String, test: Option<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cmu,
    Gsmo,
    Rsmo,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cmu => "cmu",
            Self::Gsmo => "gsmo",
            Self::Rsmo => "rsmo",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cmu" => Ok(Self::Cmu),
            "gsmo" => Ok(Self::Gsmo),
            "rsmo" => Ok(Self::Rsmo),
            other => Err(HarnessError::Config(format!("unknown solver {other:?}"))),
        }
    }
}

/// Solver knobs; `None` fields fall back to the solver's own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub eps_active: Option<f64>,
    pub kkt_tol: Option<f64>,
    /// SMO step limit (CMU ignores it).
    pub max_iter: Option<usize>,
    /// SMO: steps between KKT tests and objective samples (default `n`).
    pub check_period: Option<usize>,
    pub max_cycles: Option<usize>,
    pub inactive_cap: Option<usize>,
    pub reg: Option<f64>,
    pub refine_steps: Option<usize>,
    /// Record the objective after every CMU step (O(n²) each).
    pub track_objective: Option<bool>,
}

/// Parses a box bound; `inf`, `infinity` and `∞` mean no upper bound.
pub fn parse_upper(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    let v = match t.as_str() {
        "inf" | "+inf" | "infinity" | "∞" => f64::INFINITY,
        _ => t.parse().map_err(|_| HarnessError::Config(format!("not a bound: {s:?}")))?,
    };
    if !(v > 0.0) {
        return Err(HarnessError::Config(format!("C must be positive, got {s}")));
    }
    Ok(v)
}

/// JSON has no infinity, so `C = ∞` is written as the string `"inf"`.
pub mod upper_bound {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => super::parse_upper(&s).map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub gamma: f64,
    #[serde(rename = "C", with = "upper_bound")]
    pub upper: f64,
    pub solver: SolverKind,
    #[serde(default)]
    pub settings: SolverSettings,
    /// Fresh points drawn from the generator for error estimates.
    pub test_size: usize,
    /// Seeds data generation and RSMO.
    pub seed: u64,
}

pub const DEFAULT_TEST_SIZE: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
/// Overrides [`DEFAULT_SEED`] when set; explicit `--seed` flags win.
pub const SEED_ENV: &str = "SVMQP_SEED";

/// [`DEFAULT_SEED`] unless `SVMQP_SEED` holds a valid integer.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

impl ExperimentConfig {
    pub fn halfmoon(d: usize, n: usize, gamma: f64, solver: SolverKind) -> Self {
        Self {
            data: DataSource::Halfmoon { d, delta: 0.25, n },
            gamma,
            upper: f64::INFINITY,
            solver,
            settings: SolverSettings::default(),
            test_size: DEFAULT_TEST_SIZE,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive and finite");
        }
        if !(self.upper > 0.0) {
            return bad("C must be positive");
        }
        match &self.data {
            DataSource::Halfmoon { d, delta, n } => {
                if *d < 2 || !(*delta > 0.0 && *delta < 2.0) || *n < 4 || n % 4 != 0 {
                    return bad("half-moon needs d ≥ 2, 0 < delta < 2 and n a positive multiple of 4");
                }
            }
            DataSource::Checkerboard { n } => {
                if *n < 2 {
                    return bad("checkerboard needs n ≥ 2");
                }
            }
            DataSource::File { .. } => {}
        }
        if !matches!(self.data, DataSource::File { .. }) && self.test_size == 0 {
            return bad("test_size must be positive");
        }
        let s = &self.settings;
        let positive = |v: Option<f64>| v.is_none_or(|x| x > 0.0 && x.is_finite());
        if !positive(s.eps_active) || !positive(s.kkt_tol) {
            return bad("eps and kkt-tol must be positive and finite");
        }
        if s.reg.is_some_and(|r| !(r >= 0.0 && r.is_finite())) {
            return bad("reg must be nonnegative and finite");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_parsing() {
        assert_eq!(parse_upper("inf").unwrap(), f64::INFINITY);
        assert_eq!(parse_upper("Infinity").unwrap(), f64::INFINITY);
        assert_eq!(parse_upper("10").unwrap(), 10.0);
        assert!(parse_upper("0").is_err());
        assert!(parse_upper("-1").is_err());
        assert!(parse_upper("abc").is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = ExperimentConfig::halfmoon(2, 500, 0.03, SolverKind::Cmu);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"C\":\"inf\""));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        cfg.upper = 10.0;
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::halfmoon(2, 500, 0.03, SolverKind::Gsmo);
        assert!(ok.validate().is_ok());
        assert!(ExperimentConfig { gamma: 0.0, ..ok.clone() }.validate().is_err());
        assert!(ExperimentConfig { data: DataSource::Halfmoon { d: 2, delta: 0.25, n: 10 }, ..ok.clone() }
            .validate()
            .is_err());
        let mut s = ok.clone();
        s.settings.kkt_tol = Some(-1.0);
        assert!(s.validate().is_err());
        assert_eq!("RSMO".parse::<SolverKind>().unwrap(), SolverKind::Rsmo);
        assert!("newton".parse::<SolverKind>().is_err());
    }
}
