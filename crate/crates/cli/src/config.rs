//! TOML run configuration. See `docs/config.md` for the schema.

use num_bigint::BigInt;
use serde::Deserialize;
use sidonlab::{ConstructionParams, LevelSet, Run, StageGeometry, StageParams};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub construction: Construction,
    /// Number of built stages `J`: heights `h_1..=h_J` are available.
    pub depth: usize,
    pub autocorr: Option<AutocorrConfig>,
    pub sidon: Option<SidonConfig>,
    pub mixing: Option<MixingConfig>,
    pub power: Option<PowerConfig>,
    pub dissipativity: Option<DissipativityConfig>,
    pub thm41: Option<Thm41Config>,
    pub gamma: Option<GammaConfig>,
    pub lp: Option<LpConfig>,
    pub oracle: Option<OracleConfig>,
}

/// Exactly one construction source, selected by `kind`.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Construction {
    /// `s_j(i) = base^i h_j - h_j`.
    SidonPower { h1: u64, r: usize, base: u64 },
    /// `s_j(i) = psi_j^i h_j`, `psi_j = psi0 + growth (j - 1)`; `r_j = r`, or
    /// `r_power^j` when `r_power` is given.
    GeometricPsi {
        h1: u64,
        psi0: u64,
        growth: u64,
        r: Option<usize>,
        r_power: Option<usize>,
    },
    /// Spacer lists per stage, as decimal strings.
    Explicit { h1: u64, stages: Vec<Vec<String>> },
}

impl Construction {
    /// Parameters for `stages` cutting stages.
    pub fn params(&self, stages: usize) -> Result<ConstructionParams, CliError> {
        Ok(match self {
            Self::SidonPower { h1, r, base } => {
                ConstructionParams::sidon_power(*h1, *r, *base, stages)
            }
            Self::GeometricPsi {
                h1,
                psi0,
                growth,
                r,
                r_power,
            } => {
                let columns: Box<dyn Fn(usize) -> usize> = match (r, r_power) {
                    (Some(r), None) => {
                        let r = *r;
                        Box::new(move |_| r)
                    }
                    (None, Some(b)) => {
                        let b = *b;
                        Box::new(move |j| b.pow(j as u32))
                    }
                    _ => {
                        return Err(CliError::Config(
                            "geometric_psi needs exactly one of r, r_power".into(),
                        ))
                    }
                };
                ConstructionParams::geometric_psi(*h1, stages, *psi0, *growth, columns)
            }
            Self::Explicit { h1, stages: given } => {
                if given.len() < stages {
                    return Err(CliError::Config(format!(
                        "explicit construction lists {} stages, {stages} needed",
                        given.len()
                    )));
                }
                let st = given[..stages]
                    .iter()
                    .map(|s| {
                        Ok(StageParams::new(
                            s.iter().map(|x| big(x)).collect::<Result<_, _>>()?,
                        ))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                ConstructionParams::new(*h1, st)
            }
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.depth == 0 {
            return Err(CliError::Config("depth must be at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ConstructionParams, CliError> {
        self.construction.params(self.depth - 1)
    }

    pub fn geometry(&self) -> Result<StageGeometry, CliError> {
        Ok(sidonlab::build_geometry(&self.params()?, self.depth)?)
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}

pub fn big(s: &str) -> Result<BigInt, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("not an integer: {s:?}")))
}

/// A level set: the whole tower `X_stage`, or explicit half-open runs at `stage`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub stage: usize,
    pub runs: Option<Vec<[String; 2]>>,
}

impl SetSpec {
    pub fn build(&self, geom: &StageGeometry) -> Result<LevelSet, CliError> {
        match &self.runs {
            None => Ok(sidonlab::tower_set(geom, self.stage)?),
            Some(runs) => {
                let runs = runs
                    .iter()
                    .map(|[a, b]| Ok(Run::new(big(a)?, big(b)?)))
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(LevelSet::new(self.stage, runs).checked(geom)?)
            }
        }
    }
}

fn default_set() -> SetSpec {
    SetSpec {
        stage: 1,
        runs: None,
    }
}

/// A decimal integer, or `h<j>` for the height `h_j` of `geom`.
pub fn bound(s: &str, geom: &StageGeometry) -> Result<BigInt, CliError> {
    match s.trim().strip_prefix('h') {
        Some(j) => {
            let j: usize = j
                .parse()
                .map_err(|_| CliError::Config(format!("bad height reference {s:?}")))?;
            Ok(geom.height(j)?.clone())
        }
        None => big(s),
    }
}

/// An inclusive integer range written as two bounds (see [`bound`]).
pub fn range(r: &[String; 2], geom: &StageGeometry) -> Result<(BigInt, BigInt), CliError> {
    let (lo, hi) = (bound(&r[0], geom)?, bound(&r[1], geom)?);
    if lo > hi {
        return Err(CliError::Config(format!("empty range [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrConfig {
    #[serde(default = "default_set")]
    pub set: SetSpec,
    /// Inclusive shift range.
    pub m_range: [String; 2],
    #[serde(default = "default_max_rows")]
    pub max_rows: usize,
}

fn default_max_rows() -> usize {
    1_000_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidonConfig {
    pub stages: Vec<usize>,
    /// Restricts the sweep inside `(h_j, h_{j+1}]`.
    pub m_range: Option<[String; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    #[serde(default = "one")]
    pub base_stage: usize,
    pub stages: Vec<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    pub stages: Vec<usize>,
    pub p_list: Vec<u64>,
    pub m_range: Option<[String; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativityConfig {
    #[serde(default = "one")]
    pub base_stage: usize,
    pub horizon: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thm41Config {
    #[serde(default = "default_set")]
    pub set: SetSpec,
    pub stage: usize,
    pub p_list: Vec<u64>,
    /// Block counts `m(j)`; one report per entry.
    pub blocks: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// Bit strings defining `γ` and `γ'`.
    pub seeds: [String; 2],
    pub block: u64,
    #[serde(default)]
    pub p_list: Vec<u64>,
    /// Built stages of each `T_γ`.
    pub stages: usize,
    pub sweep: [String; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpConfig {
    /// Growth exponent, `"2.5"` or `"5/2"`.
    pub c: String,
    pub p: u32,
    pub j_max: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_set")]
    pub set: SetSpec,
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit shifts.
    pub shifts: Option<Vec<String>>,
    /// Or `count` shifts drawn uniformly from `draw_range`.
    pub count: Option<usize>,
    pub draw_range: Option<[String; 2]>,
    #[serde(default)]
    pub draw: Draw,
    /// Required number of shifts within `sigmas` standard errors.
    pub min_within: Option<usize>,
    #[serde(default = "three")]
    pub sigmas: f64,
}

fn three() -> f64 {
    3.0
}

/// How random shifts are drawn from `draw_range`.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Draw {
    /// Uniform over the whole range.
    #[default]
    Uniform,
    /// Uniform over the shifts in range with `ρ > 0`.
    Support,
}
