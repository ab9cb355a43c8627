//! One function per subcommand. Each returns the structured report, the CSV
//! table when the command has one, and whether every checked property holds.

use num_bigint::{BigInt, RandBigInt};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sidonlab::gamma::ExperimentSpec;
use sidonlab::oracle::sample_rng;
use sidonlab::params::validate_params;
use sidonlab::rational::{parse_rational, serde_bigint, serde_num_den, to_num_den};
use sidonlab::{shift_profile, Autocorrelator, GammaSet, Rational, SidonVerdict, ValidationReport};

use crate::config::{self, Draw, RunConfig};
use crate::output::{float_col, rat_cols, Table};
use crate::CliError;

pub struct Outcome {
    pub report: Value,
    pub table: Option<Table>,
    pub holds: bool,
    pub violations: Vec<String>,
}

fn outcome<T: Serialize>(
    report: &T,
    table: Option<Table>,
    violations: Vec<String>,
) -> Result<Outcome, CliError> {
    Ok(Outcome {
        report: serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?,
        table,
        holds: violations.is_empty(),
        violations,
    })
}

pub fn dispatch(name: &str, cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    match name {
        "build" => build(cfg),
        "autocorr" => autocorr(cfg),
        "sidon-check" => sidon_check(cfg),
        "mixing-bound" => mixing(cfg),
        "power-disjoint" => power(cfg),
        "dissipativity" => dissipativity(cfg),
        "thm41" => thm41(cfg),
        "gamma-disjoint" => gamma(cfg),
        "lp-shift" => lp(cfg),
        "oracle-check" => oracle(cfg, seed),
        _ => unreachable!("clap only yields known commands"),
    }
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: usize,
    #[serde(with = "serde_bigint")]
    pub height: BigInt,
    #[serde(with = "serde_num_den")]
    pub level_measure: Rational,
    /// Columns and spacers of the cut at this stage; absent for the last built stage.
    pub r: Option<usize>,
    #[serde(with = "serde_bigint::vec")]
    pub spacers: Vec<BigInt>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub depth: usize,
    pub stages: Vec<StageRow>,
    pub validation: ValidationReport,
}

fn build(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let g = cfg.geometry()?;
    let mut stages = Vec::new();
    let mut t = Table::new(vec![
        "stage",
        "height",
        "level_measure_num_den",
        "level_measure_float",
        "r",
        "spacers",
    ]);
    for j in 1..=g.depth() {
        let st = params.stage(j).filter(|_| j < g.depth());
        let row = StageRow {
            stage: j,
            height: g.height(j)?.clone(),
            level_measure: g.level_measure(j)?.clone(),
            r: st.map(|s| s.r),
            spacers: st.map(|s| s.s.clone()).unwrap_or_default(),
        };
        let [a, b] = rat_cols(&row.level_measure);
        let spacers: Vec<String> = row.spacers.iter().map(|s| s.to_string()).collect();
        t.push(vec![
            j.to_string(),
            row.height.to_string(),
            a,
            b,
            row.r.map(|r| r.to_string()).unwrap_or_default(),
            spacers.join(";"),
        ]);
        stages.push(row);
    }
    let validation = validate_params(&params)?;
    let violations = if validation.well_formed {
        vec![]
    } else {
        vec!["parameters are not well formed".into()]
    };
    outcome(
        &BuildReport {
            depth: g.depth(),
            stages,
            validation,
        },
        Some(t),
        violations,
    )
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoPoint {
    #[serde(with = "serde_bigint")]
    pub m: BigInt,
    #[serde(with = "serde_num_den")]
    pub rho: Rational,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrReport {
    pub set_stage: usize,
    #[serde(with = "serde_bigint")]
    pub lo: BigInt,
    #[serde(with = "serde_bigint")]
    pub hi: BigInt,
    /// Every `m` in range with `ρ(m) > 0`.
    pub points: Vec<RhoPoint>,
}

fn autocorr(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.autocorr, "autocorr")?;
    let g = cfg.geometry()?;
    let set = c.set.build(&g)?;
    let (lo, hi) = config::range(&c.m_range, &g)?;
    if lo < BigInt::from(0) {
        return Err(CliError::Config(
            "autocorr range must be non-negative".into(),
        ));
    }
    let prof = shift_profile(&g, &set, &set, &lo, &hi)?;
    let pts = prof.points(c.max_rows)?;
    let mut t = Table::new(vec!["m", "rho_num_den", "rho_float"]);
    for (m, rho) in &pts {
        let [a, b] = rat_cols(rho);
        t.push(vec![m.to_string(), a, b]);
    }
    let report = AutocorrReport {
        set_stage: set.stage(),
        lo,
        hi,
        points: pts
            .into_iter()
            .map(|(m, rho)| RhoPoint { m, rho })
            .collect(),
    };
    outcome(&report, Some(t), vec![])
}

fn sidon_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.sidon, "sidon")?;
    let g = cfg.geometry()?;
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    for &j in &c.stages {
        let range = c
            .m_range
            .as_ref()
            .map(|r| config::range(r, &g))
            .transpose()?;
        let rep = sidonlab::sidon_check(&g, j, range)?;
        if rep.verdict == SidonVerdict::Multiple {
            violations.push(format!(
                "stage {j}: {} segments meet several columns",
                rep.multiple_segments
            ));
        }
        reports.push(rep);
    }
    outcome(&reports, None, violations)
}

fn mixing(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.mixing, "mixing")?;
    let g = cfg.geometry()?;
    let rep = sidonlab::mixing_bound_check(&g, c.base_stage, c.stages.iter().copied())?;
    let mut t = Table::new(vec![
        "stage",
        "r",
        "m_lo",
        "m_hi",
        "max_num_den",
        "max_float",
        "argmax",
        "bound_num_den",
        "bound_float",
        "tight",
        "holds",
    ]);
    for row in &rep.rows {
        let [a, b] = rat_cols(&row.max);
        let [c2, d] = rat_cols(&row.bound);
        t.push(vec![
            row.stage.to_string(),
            row.r.to_string(),
            row.lo.to_string(),
            row.hi.to_string(),
            a,
            b,
            row.argmax.to_string(),
            c2,
            d,
            row.tight.to_string(),
            row.holds.to_string(),
        ]);
    }
    let violations = rep
        .violations
        .iter()
        .map(|j| format!("stage {j}: bound exceeded"))
        .collect();
    outcome(&rep, Some(t), violations)
}

fn power(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.power, "power")?;
    let g = cfg.geometry()?;
    let range = c
        .m_range
        .as_ref()
        .map(|r| config::range(r, &g))
        .transpose()?;
    let mut reports = Vec::new();
    let mut t = Table::new(vec![
        "stage",
        "power",
        "m_lo",
        "m_hi",
        "rho_at_power_num_den",
        "rho_at_power_float",
    ]);
    let mut violations = Vec::new();
    for &j in &c.stages {
        for &p in &c.p_list {
            let rep = sidonlab::power_disjointness_check(&g, j, p, range.clone())?;
            for v in &rep.violations {
                let [a, b] = rat_cols(&v.rho_at_power);
                t.push(vec![
                    j.to_string(),
                    p.to_string(),
                    v.lo.to_string(),
                    v.hi.to_string(),
                    a,
                    b,
                ]);
                violations.push(format!("stage {j}, p = {p}: m in [{}, {}]", v.lo, v.hi));
            }
            reports.push(rep);
        }
    }
    outcome(&reports, Some(t), violations)
}

fn dissipativity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.dissipativity, "dissipativity")?;
    let g = cfg.geometry()?;
    let rep = sidonlab::dissipativity_report(&g, c.base_stage, c.horizon)?;
    let violations = rep
        .stages
        .iter()
        .filter(|s| !(s.single_column && s.identity_holds))
        .map(|s| {
            format!(
                "stage {}: containment or column-mass identity fails",
                s.stage
            )
        })
        .collect();
    outcome(&rep, None, violations)
}

fn thm41(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.thm41, "thm41")?;
    let g = cfg.geometry()?;
    let f = c.set.build(&g)?;
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    for &m in &c.blocks {
        let rep = sidonlab::theorem41_report(&g, &f, c.stage, &c.p_list, Some(m))?;
        if !rep.all_hold() {
            violations.push(format!("m = {m}: an identity or bound fails"));
        }
        reports.push(rep);
    }
    outcome(&reports, None, violations)
}

fn gamma(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.gamma, "gamma")?;
    let base = cfg.construction.params(c.stages)?;
    let bg = sidonlab::build_geometry(&base, c.stages + 1)?;
    let g1 = GammaSet::from_bits(&c.seeds[0])?;
    let g2 = GammaSet::from_bits(&c.seeds[1])?;
    let spec = ExperimentSpec {
        block: c.block,
        powers: c.p_list.clone(),
        stages: c.stages,
        sweep: config::range(&c.sweep, &bg)?,
    };
    let rep = sidonlab::disjointness_experiment(&base, &g1, &g2, &spec)?;
    let mut violations = Vec::new();
    if !rep.ordering_holds {
        violations.push(format!(
            "rigidity deficit {} is not below mixing norm {}",
            to_num_den(&rep.rigidity_deficit),
            to_num_den(&rep.mixing_norm)
        ));
    }
    if !rep.separated_past_prediction {
        violations.push(format!(
            "supports overlap past the predicted threshold {}",
            rep.predicted_threshold
        ));
    }
    outcome(&rep, None, violations)
}

fn lp(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.lp, "lp")?;
    let growth = parse_rational(&c.c)
        .ok_or_else(|| CliError::Config(format!("bad rational c = {:?}", c.c)))?;
    let rep = sidonlab::lp_convergence_report(growth, c.p, c.j_max)?;
    let mut t = Table::new(vec![
        "block",
        "q",
        "delta_norm_pow_num_den",
        "delta_norm_pow_float",
        "bound_num_den",
        "bound_float",
        "deviation_pow_num_den",
        "deviation_pow_float",
        "deviation",
        "deviation_tail",
        "center_num_den",
    ]);
    for r in &rep.rows {
        let [a, b] = rat_cols(&r.delta_norm_pow);
        let [c2, d] = rat_cols(&r.bound);
        let [e, f] = rat_cols(&r.deviation_pow);
        t.push(vec![
            r.block.to_string(),
            r.q.to_string(),
            a,
            b,
            c2,
            d,
            e,
            f,
            float_col(r.deviation),
            float_col(r.deviation_tail),
            to_num_den(&r.center),
        ]);
    }
    let mut violations = Vec::new();
    for r in &rep.rows {
        if !r.bound_holds {
            violations.push(format!("block {}: ‖Δ‖ bound fails", r.block));
        }
        if r.center != Rational::from_integer(1.into()) {
            violations.push(format!(
                "block {}: center {}",
                r.block,
                to_num_den(&r.center)
            ));
        }
    }
    if !rep.strictly_decreasing {
        violations.push("deviations are not strictly decreasing".into());
    }
    outcome(&rep, Some(t), violations)
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    #[serde(with = "serde_bigint")]
    pub d: BigInt,
    #[serde(with = "serde_num_den")]
    pub exact: Rational,
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub within: bool,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub set_stage: usize,
    pub samples: u64,
    pub seed: u64,
    pub sigmas: f64,
    pub rows: Vec<OracleRow>,
    pub within: usize,
    pub required: usize,
}

fn oracle(cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let c = cfg.section(&cfg.oracle, "oracle")?;
    let seed = seed.unwrap_or(c.seed);
    let g = cfg.geometry()?;
    let set = c.set.build(&g)?;
    let shifts: Vec<BigInt> = match (&c.shifts, c.count, &c.draw_range) {
        (Some(list), None, None) => list
            .iter()
            .map(|s| config::bound(s, &g))
            .collect::<Result<_, _>>()?,
        (None, Some(n), Some(r)) => {
            let (lo, hi) = config::range(r, &g)?;
            // a stream no sample index can reach
            let mut rng = sample_rng(seed, u64::MAX);
            match c.draw {
                Draw::Uniform => (0..n)
                    .map(|_| rng.gen_bigint_range(&lo, &(&hi + 1)))
                    .collect(),
                Draw::Support => {
                    let spans = shift_profile(&g, &set, &set, &lo, &hi)?.support();
                    let total: BigInt = spans.iter().map(|(a, b)| b - a + 1).sum();
                    if total.is_zero() {
                        return Err(CliError::Config("no shift in draw_range has ρ > 0".into()));
                    }
                    (0..n)
                        .map(|_| {
                            let mut idx = rng.gen_bigint_range(&BigInt::zero(), &total);
                            for (a, b) in &spans {
                                let len = b - a + 1;
                                if idx < len {
                                    return a + idx;
                                }
                                idx -= len;
                            }
                            unreachable!("index below the support size")
                        })
                        .collect()
                }
            }
        }
        _ => {
            return Err(CliError::Config(
                "oracle needs either shifts, or count with draw_range".into(),
            ))
        }
    };
    let ac = Autocorrelator::new(&g, &set)?;
    let mut rows = Vec::new();
    for (i, d) in shifts.iter().enumerate() {
        let exact = ac.rho(d)?;
        let est = sidonlab::estimate_autocorrelation(
            &g,
            &set,
            d,
            c.samples,
            seed.wrapping_add(i as u64),
        )?;
        let diff = (sidonlab::rational::to_f64(&exact) - est.estimate).abs();
        rows.push(OracleRow {
            d: d.clone(),
            within: diff <= c.sigmas * est.std_error || (diff == 0.0),
            exact,
            estimate: est.estimate,
            std_error: est.std_error,
            hits: est.hits,
        });
    }
    let within = rows.iter().filter(|r| r.within).count();
    let required = c.min_within.unwrap_or(rows.len());
    let mut t = Table::new(vec![
        "d",
        "exact_num_den",
        "exact_float",
        "estimate",
        "std_error",
        "hits",
        "within",
    ]);
    for r in &rows {
        let [a, b] = rat_cols(&r.exact);
        t.push(vec![
            r.d.to_string(),
            a,
            b,
            float_col(r.estimate),
            float_col(r.std_error),
            r.hits.to_string(),
            r.within.to_string(),
        ]);
    }
    let violations = if within < required {
        vec![format!(
            "{within} of {} shifts within {} standard errors, {required} required",
            rows.len(),
            c.sigmas
        )]
    } else {
        vec![]
    };
    let report = OracleReport {
        set_stage: set.stage(),
        samples: c.samples,
        seed,
        sigmas: c.sigmas,
        rows,
        within,
        required,
    };
    outcome(&report, Some(t), violations)
}
