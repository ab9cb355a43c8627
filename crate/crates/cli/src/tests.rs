use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sidonlab::{
    DisjointnessReport, DissipativityReport, LpReport, MixingReport, PowerReport, SidonReport,
    SidonVerdict, Theorem41Report,
};

use super::execute;
use crate::commands::{AutocorrReport, BuildReport, OracleReport};
use crate::output::Envelope;

const REF1: &str = include_str!("../../../configs/ref1.toml");
const REF2: &str = include_str!("../../../configs/ref2.toml");
const REF3: &str = include_str!("../../../configs/ref3.toml");
const TWO: &str = include_str!("../../../configs/two_column.toml");
const LP: &str = include_str!("../../../configs/lp.toml");

struct Scratch(tempfile::TempDir);

impl Scratch {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> u8 {
    let mut args = vec![
        "sidonlab".to_string(),
        cmd.to_string(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    execute(args)
}

/// Parses a JSON report, checks it re-serialises to the same bytes, returns it.
fn round_trip<T: Serialize + DeserializeOwned>(path: &Path) -> Envelope<T> {
    let text = std::fs::read_to_string(path).unwrap();
    let env: Envelope<T> = serde_json::from_str(&text).unwrap();
    let mut again = serde_json::to_string_pretty(&env).unwrap();
    again.push('\n');
    assert_eq!(again, text, "{}", path.display());
    env
}

#[test]
fn autocorr_csv_lists_the_sidon_profile() {
    let s = Scratch::new();
    let cfg = s.file("ref1.toml", REF1);
    let out = s.path("a.csv");
    assert_eq!(run("autocorr", &cfg, &out, &[]), 0);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "# schema=autocorr/v1\n\
         m,rho_num_den,rho_float\n\
         10,1/3,0.333333333333\n\
         100,1/3,0.333333333333\n\
         110,1/3,0.333333333333\n"
    );
    let json = s.path("a.json");
    assert_eq!(run("autocorr", &cfg, &json, &[]), 0);
    let env: Envelope<AutocorrReport> = round_trip(&json);
    assert_eq!(env.schema, "autocorr/v1");
    assert_eq!(env.report.points.len(), 3);
}

#[test]
fn empty_result_is_header_only() {
    let s = Scratch::new();
    let text = REF1.replace(r#"m_range = ["2", "h2"]"#, r#"m_range = ["11", "99"]"#);
    let cfg = s.file("c.toml", &text);
    let out = s.path("a.csv");
    assert_eq!(run("autocorr", &cfg, &out, &[]), 0);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "# schema=autocorr/v1\nm,rho_num_den,rho_float\n"
    );
}

#[test]
fn sidon_check_reports_sidon() {
    let s = Scratch::new();
    let cfg = s.file("ref1.toml", REF1);
    let out = s.path("s.json");
    assert_eq!(run("sidon-check", &cfg, &out, &[]), 0);
    let env: Envelope<Vec<SidonReport>> = round_trip(&out);
    assert!(env.holds);
    assert!(env.report.iter().all(|r| r.verdict == SidonVerdict::Sidon));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains(r#""verdict": "sidon""#));
}

#[test]
fn power_violation_exits_three() {
    let s = Scratch::new();
    let cfg = s.file("ref1.toml", REF1);
    let out = s.path("p.csv");
    assert_eq!(run("power-disjoint", &cfg, &out, &[]), 3);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("1,11,10,10,")), "{text}");
    let json = s.path("p.json");
    assert_eq!(run("power-disjoint", &cfg, &json, &[]), 3);
    let env: Envelope<Vec<PowerReport>> = round_trip(&json);
    assert!(!env.holds);
}

#[test]
fn usage_and_config_errors_exit_two() {
    let s = Scratch::new();
    let out = s.path("o.json");
    let missing = s.path("missing.toml");
    assert_eq!(run("build", &missing, &out, &[]), 2);

    let bad = s.file("bad.toml", "depth = [");
    assert_eq!(run("build", &bad, &out, &[]), 2);

    let unknown = s.file("unknown.toml", &format!("{REF1}\ncolour = 1\n"));
    assert_eq!(run("build", &unknown, &out, &[]), 2);

    let both = REF3.replace("r_power = 4", "r_power = 4\nr = 4");
    let both = s.file("both.toml", &both);
    assert_eq!(run("build", &both, &out, &[]), 2);

    let cfg = s.file("ref1.toml", REF1);
    assert_eq!(run("sidon-check", &cfg, &s.path("x.csv"), &[]), 2);
    assert_eq!(run("gamma-disjoint", &cfg, &out, &[]), 2);
    assert_eq!(run("build", &cfg, &out, &["--threads", "0"]), 2);
    assert_eq!(execute(["sidonlab", "nonsense"]), 2);
    assert_eq!(execute(["sidonlab", "build"]), 2);

    let unwritable = s.path("no/such/dir/o.json");
    assert_eq!(run("build", &cfg, &unwritable, &[]), 2);
}

#[test]
fn oracle_output_is_thread_independent() {
    let s = Scratch::new();
    let text = REF1.replace("samples = 100000", "samples = 4000");
    let cfg = s.file("c.toml", &text);
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "8", "8", "3"].iter().enumerate() {
        let out = s.path(&format!("o{i}.csv"));
        run(
            "oracle-check",
            &cfg,
            &out,
            &["--threads", threads, "--seed", "11"],
        );
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let other = s.path("seed.csv");
    run("oracle-check", &cfg, &other, &["--seed", "12"]);
    assert_ne!(std::fs::read(&other).unwrap(), outputs[0]);
}

#[test]
fn every_report_round_trips() {
    let s = Scratch::new();
    let ref1 = s.file("ref1.toml", REF1);
    let ref2 = s.file("ref2.toml", REF2);
    let ref3 = s.file("ref3.toml", REF3);
    let two = s.file("two.toml", TWO);
    let lp = s.file("lp.toml", LP);
    let small_oracle = s.file(
        "o.toml",
        &REF1.replace("samples = 100000", "samples = 2000"),
    );

    let out = |n: &str| s.path(n);
    assert_eq!(run("build", &ref2, &out("b.json"), &[]), 0);
    let b: Envelope<BuildReport> = round_trip(&out("b.json"));
    assert_eq!(b.report.stages.len(), 7);

    assert_eq!(run("mixing-bound", &ref3, &out("m.json"), &[]), 0);
    round_trip::<MixingReport>(&out("m.json"));

    assert_eq!(run("dissipativity", &ref3, &out("d.json"), &[]), 0);
    round_trip::<DissipativityReport>(&out("d.json"));

    assert_eq!(run("thm41", &ref2, &out("t.json"), &[]), 0);
    let t: Envelope<Vec<Theorem41Report>> = round_trip(&out("t.json"));
    assert_eq!(t.report.len(), 3);

    assert_eq!(run("gamma-disjoint", &two, &out("g.json"), &[]), 0);
    round_trip::<DisjointnessReport>(&out("g.json"));

    assert_eq!(run("lp-shift", &lp, &out("l.json"), &[]), 0);
    round_trip::<LpReport>(&out("l.json"));

    assert_eq!(run("oracle-check", &small_oracle, &out("o.json"), &[]), 0);
    round_trip::<OracleReport>(&out("o.json"));

    assert_eq!(run("build", &ref1, &out("b.csv"), &[]), 0);
    let csv = std::fs::read_to_string(out("b.csv")).unwrap();
    assert!(csv.starts_with("# schema=build/v1\nstage,height,"));
    assert!(csv.contains("\n2,1110,1/3,0.333333333333,3,"));
}
