//! Run configuration: a JSON file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nblab::algebra::SeedFunction;
use nblab::family_invgamma::InvGammaOptions;
use nblab::family_recursive::{parse_shifts, RecursiveBasis, RecursiveOptions};
use nblab::mc::PAIR_GUARD;
use nblab::specfun::RhoSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Classical,
    Invgamma,
    Recursive,
}

impl FromStr for Family {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "classical" => Ok(Family::Classical),
            "invgamma" => Ok(Family::Invgamma),
            "recursive" => Ok(Family::Recursive),
            _ => Err(CliError::Usage(format!("unknown family '{s}' (expected classical, invgamma or recursive)"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Classical => "classical",
            Family::Invgamma => "invgamma",
            Family::Recursive => "recursive",
        })
    }
}

/// `"xi"`, `"gaussian"`, or `{"coeffs": [...], "normalization": x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedConfig {
    Named(String),
    Poly(serde_json::Value),
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig::Named("xi".into())
    }
}

impl SeedConfig {
    pub fn function(&self) -> Result<SeedFunction, CliError> {
        match self {
            SeedConfig::Named(n) if n == "xi" => Ok(SeedFunction::xi_seed()),
            SeedConfig::Named(n) if n == "gaussian" => Ok(SeedFunction::gaussian()),
            SeedConfig::Named(n) => Err(CliError::Usage(format!("unknown seed '{n}' (expected xi, gaussian or a polynomial)"))),
            SeedConfig::Poly(v) => SeedFunction::from_json(&v.to_string()).map_err(|e| CliError::Usage(format!("seed: {e}"))),
        }
    }

    pub fn is_xi(&self) -> bool {
        matches!(self, SeedConfig::Named(n) if n == "xi")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub j_max: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig { j_max: 12, t_min: 0.0, t_max: 30.0, points: 301 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    pub seeds: usize,
    #[serde(rename = "N")]
    pub big_n: Vec<usize>,
    /// Inline coefficients; otherwise read from `coefficients_file` or the
    /// distance report of the `out` directory.
    pub coefficients: Option<Vec<f64>>,
    pub coefficients_file: Option<PathBuf>,
    pub variance_samples: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n: 2,
            seeds: 32,
            big_n: vec![4, 16, 64],
            coefficients: None,
            coefficients_file: None,
            variance_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: Family,
    pub n_max: usize,
    pub y_spec: RhoSpec,
    pub seed: SeedConfig,
    /// One shift for all `k`, or a comma-separated list.
    pub r: String,
    /// Quadrature tolerance of the family computations.
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub rng_seed: u64,
    pub invgamma: InvGammaOptions,
    pub recursive: RecursiveOptions,
    pub moments: MomentsConfig,
    pub mc: McConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: Family::Classical,
            n_max: 6,
            y_spec: RhoSpec::DiracOne,
            seed: SeedConfig::default(),
            r: "1/2".into(),
            tol: None,
            out: PathBuf::from("out"),
            rng_seed: 0,
            invgamma: InvGammaOptions::default(),
            recursive: RecursiveOptions::default(),
            moments: MomentsConfig::default(),
            mc: McConfig::default(),
        }
    }
}

/// Largest `n_max` per family: beyond these the Gram systems are numerically singular.
fn n_limit(f: Family) -> usize {
    match f {
        Family::Classical => 40,
        Family::Invgamma => 10,
        Family::Recursive => 12,
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.n_max == 0 || self.n_max > n_limit(self.family) {
            return bad(format!("n_max must be in 1..={} for {}, got {}", n_limit(self.family), self.family, self.n_max));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        self.y_spec.validate().map_err(|e| CliError::Usage(format!("y_spec: {e}")))?;
        self.seed.function()?;
        self.shifts()?;
        let m = &self.moments;
        if m.points < 2 || !(m.t_max > m.t_min) || m.j_max == 0 {
            return bad("moments: need points >= 2, t_max > t_min, j_max >= 1".into());
        }
        let mc = &self.mc;
        if mc.n == 0 || mc.seeds == 0 || mc.big_n.is_empty() || mc.big_n.contains(&0) || mc.variance_samples < 2 {
            return bad("mc: n, seeds, every N and variance_samples must be positive".into());
        }
        if let Some(c) = &mc.coefficients {
            if c.len() != mc.n || c.iter().any(|x| !x.is_finite()) {
                return bad(format!("mc.coefficients must hold {} finite values", mc.n));
            }
        }
        if let Some(&big) = mc.big_n.iter().find(|&&big| mc.n * big > PAIR_GUARD) {
            return bad(format!("mc: n * N = {} * {big} exceeds the pair guard {PAIR_GUARD}", mc.n));
        }
        Ok(())
    }

    pub fn shifts(&self) -> Result<Vec<num_rational::BigRational>, CliError> {
        let r = parse_shifts(&self.r, self.n_max).map_err(|e| CliError::Usage(format!("r: {e}")))?;
        if r.len() < self.n_max {
            return Err(CliError::Usage(format!("r lists {} shifts, need {}", r.len(), self.n_max)));
        }
        Ok(r)
    }

    pub fn recursive_basis(&self) -> Result<RecursiveBasis, CliError> {
        let mut r = self.shifts()?;
        r.truncate(self.n_max);
        RecursiveBasis::new(self.seed.function()?, r, self.n_max).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn invgamma_options(&self) -> InvGammaOptions {
        match self.tol {
            Some(t) => InvGammaOptions { gram_tol: t, rhs_tol: t, ..self.invgamma },
            None => self.invgamma,
        }
    }

    pub fn recursive_options(&self) -> RecursiveOptions {
        match self.tol {
            Some(t) => RecursiveOptions { structure_tol: t, ..self.recursive },
            None => self.recursive,
        }
    }

    /// Residual cross-check tolerance of the classical family.
    pub fn classical_tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }
}
