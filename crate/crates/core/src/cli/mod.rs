//! Batch driver: run configurations, verification suites, reports and the
//! command-line front end.

pub mod suites;

use crate::error::{Error, Result};
use crate::ring::{make_context, ExtKind, FieldContext};
use crate::scalar::{Cyc, LaurentRational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable naming the default report directory.
pub const OUT_DIR_ENV: &str = "WEILZETA_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Ext {
    None,
    Unramified,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: u64,
    pub precision: u32,
    pub ext: Ext,
    pub backend: Backend,
    pub tolerance: f64,
    pub max_degree: u32,
    pub max_shell: i32,
    pub order: usize,
    pub m_max: i32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 3,
            precision: 10,
            ext: Ext::Unramified,
            backend: Backend::Exact,
            tolerance: 1e-9,
            max_degree: 3,
            max_shell: 6,
            order: 12,
            m_max: 2,
        }
    }
}

impl RunConfig {
    pub fn with_p(p: u64, precision: u32) -> Self {
        RunConfig { p, precision, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::ring::is_prime(self.p) {
            return Err(Error::NotPrime(self.p));
        }
        if self.precision == 0 {
            return Err(Error::Invalid("precision must be positive".into()));
        }
        if self.max_degree > self.precision {
            return Err(Error::Invalid(format!(
                "max degree {} exceeds precision {}",
                self.max_degree, self.precision
            )));
        }
        if self.max_shell < 0 || self.max_shell as u32 > self.precision {
            return Err(Error::Invalid(format!("max shell {} outside [0, precision]", self.max_shell)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Invalid("tolerance must be positive".into()));
        }
        if self.m_max < 1 {
            return Err(Error::Invalid("m bound must be at least 1".into()));
        }
        Ok(())
    }

    pub fn context(&self) -> Result<FieldContext> {
        self.validate()?;
        let ext = match self.ext {
            Ext::None => ExtKind::None,
            Ext::Unramified => ExtKind::Unramified,
            Ext::Ramified => ExtKind::Ramified,
        };
        make_context(self.p, self.precision, ext)
    }
}

/// One verified case: what was predicted, what was computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub id: String,
    pub expected: String,
    pub actual: String,
    pub exact_match: bool,
    /// Largest deviation between the complex embeddings of the two sides.
    pub float_dev: f64,
    pub matched: bool,
}

/// Sample points for comparing rational functions numerically.
const SAMPLES: [(f64, f64); 3] = [(0.11, 0.07), (-0.23, 0.05), (0.31, -0.19)];

fn cdist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl Case {
    pub fn cyc(id: impl Into<String>, expected: &Cyc, actual: &Cyc) -> Self {
        Case {
            id: id.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
            exact_match: expected == actual,
            float_dev: cdist(expected.embed_complex(), actual.embed_complex()),
            matched: false,
        }
    }

    pub fn rational(id: impl Into<String>, expected: &LaurentRational, actual: &LaurentRational) -> Self {
        let dev = SAMPLES
            .iter()
            .map(|&x| cdist(expected.eval_f64(x), actual.eval_f64(x)))
            .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        Case {
            id: id.into(),
            expected: expected.to_string(),
            actual: actual.to_string(),
            exact_match: expected.eq_exact(actual),
            float_dev: dev,
            matched: false,
        }
    }

    /// A zero / nonzero claim about a computed value.
    pub fn vanishing(id: impl Into<String>, expect_zero: bool, actual: &Cyc, tol: f64) -> Self {
        let float_zero = actual.abs_f64() <= tol;
        Case {
            id: id.into(),
            expected: if expect_zero { "0".into() } else { "nonzero".into() },
            actual: actual.to_string(),
            exact_match: actual.is_zero() == expect_zero,
            float_dev: if float_zero == expect_zero { 0.0 } else { 1.0 },
            matched: false,
        }
    }

    pub fn check(id: impl Into<String>, expected: impl Into<String>, actual: impl Into<String>, ok: bool) -> Self {
        Case {
            id: id.into(),
            expected: expected.into(),
            actual: actual.into(),
            exact_match: ok,
            float_dev: if ok { 0.0 } else { 1.0 },
            matched: false,
        }
    }

    /// An operation that is supposed to be rejected.
    pub fn rejects<T>(id: impl Into<String>, r: Result<T>) -> Self {
        match r {
            Err(e) => Case::check(id, "error", format!("error: {e}"), true),
            Ok(_) => Case::check(id, "error", "accepted", false),
        }
    }

    pub fn failed(id: impl Into<String>, expected: impl Into<String>, e: &Error) -> Self {
        Case::check(id, expected, format!("error: {e}"), false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cases: usize,
    pub mismatches: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub anchor: String,
    pub config: RunConfig,
    pub cases: Vec<Case>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

impl Report {
    pub fn new(suite: &str, anchor: &str, cfg: &RunConfig) -> Self {
        Report {
            suite: suite.into(),
            anchor: anchor.into(),
            config: cfg.clone(),
            cases: Vec::new(),
            notes: Vec::new(),
            summary: Summary { cases: 0, mismatches: 0 },
        }
    }

    pub fn push(&mut self, c: Case) {
        self.cases.push(c);
    }

    /// Decide every case under the configured backend and fill the summary.
    pub fn finish(mut self) -> Self {
        let (backend, tol) = (self.config.backend, self.config.tolerance);
        for c in &mut self.cases {
            c.matched = match backend {
                Backend::Exact => c.exact_match,
                Backend::Float => c.float_dev <= tol,
            };
        }
        self.summary = Summary {
            cases: self.cases.len(),
            mismatches: self.cases.iter().filter(|c| !c.matched).count(),
        };
        self
    }

    pub fn all_match(&self) -> bool {
        self.summary.mismatches == 0 && !self.cases.is_empty()
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.matched)
    }

    pub const CSV_HEADER: &'static str = "suite,id,expected,actual,exact_match,float_dev,matched";

    pub fn to_csv(&self) -> String {
        let q = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cases {
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{}\n",
                self.suite,
                q(&c.id),
                q(&c.expected),
                q(&c.actual),
                c.exact_match,
                c.float_dev,
                c.matched
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Report> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("report json: {e}")))
    }
}

/// Write a report as `<dir>/<suite>.<ext>` and return the path.
pub fn emit(report: &Report, dir: &Path, format: Format) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let (ext, body) = match format {
        Format::Json => ("json", report.to_json()),
        Format::Csv => ("csv", report.to_csv()),
    };
    let path = dir.join(format!("{}.{ext}", report.suite));
    std::fs::write(&path, body)?;
    Ok(path)
}

pub const SUITES: [&str; 13] = [
    "gauss",
    "kloosterman",
    "e1",
    "weil-equivariance",
    "howe",
    "theta",
    "sections",
    "unram-zeta",
    "tate-gamma",
    "gamma-mult",
    "howe-zeta",
    "transform",
    "stability",
];

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Report> {
    let r = match name {
        "gauss" => suites::gauss(cfg),
        "kloosterman" => suites::kloosterman(cfg),
        "e1" => suites::e1(cfg),
        "weil-equivariance" => suites::weil_equivariance(cfg),
        "howe" => suites::howe(cfg),
        "theta" => suites::theta(cfg),
        "sections" => suites::sections(cfg),
        "unram-zeta" => suites::unram_zeta(cfg),
        "tate-gamma" => suites::tate_gamma(cfg),
        "gamma-mult" => suites::gamma_mult(cfg),
        "howe-zeta" => suites::howe_zeta(cfg),
        "transform" => suites::transform(cfg),
        "stability" => suites::stability(cfg),
        _ => return Err(Error::Invalid(format!("unknown suite {name}; known: {}", SUITES.join(", ")))),
    }?;
    Ok(r.finish())
}

#[derive(Debug, Parser)]
#[command(name = "weilzeta", version, about = "Exact p-adic Weil representations, character sums and zeta integrals")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 3)]
    pub p: u64,
    #[arg(long, global = true, default_value_t = 10)]
    pub precision: u32,
    #[arg(long, global = true, value_enum, default_value_t = Ext::Unramified)]
    pub ext: Ext,
    #[arg(long, global = true, value_enum, default_value_t = Backend::Exact)]
    pub backend: Backend,
    /// Series order for zeta integrals.
    #[arg(long, global = true, default_value_t = 12)]
    pub order: usize,
    /// Comparison tolerance for the float backend.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, global = true, default_value_t = 3)]
    pub max_degree: u32,
    #[arg(long, global = true, default_value_t = 6)]
    pub max_shell: i32,
    #[arg(long, global = true, default_value_t = 2)]
    pub m_max: i32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,
}

impl GlobalArgs {
    pub fn config(&self) -> RunConfig {
        RunConfig {
            p: self.p,
            precision: self.precision,
            ext: self.ext,
            backend: self.backend,
            tolerance: self.tolerance,
            max_degree: self.max_degree,
            max_shell: self.max_shell,
            order: self.order,
            m_max: self.m_max,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tate γ-factors of all characters of F^× of a given degree.
    TateGamma {
        #[arg(long, default_value_t = 1)]
        degree: u32,
        /// Value at p, as a rational `a/b`.
        #[arg(long, default_value = "1")]
        at_p: String,
    },
    /// Unramified U(1,1) zeta integral: direct sum against the L-product.
    UnramZeta {
        #[arg(long, default_value = "2")]
        nu: String,
        #[arg(long, default_value = "1")]
        eta_p: String,
    },
    /// Functional-equation γ on spherical GL₂ data against the Tate product.
    GammaMultCheck {
        #[arg(long, default_value = "2")]
        alpha1: String,
        #[arg(long, default_value = "1/5")]
        alpha2: String,
        #[arg(long, default_value = "-1")]
        chi_p: String,
        #[arg(long, default_value = "1")]
        eta1_p: String,
    },
    /// Flat section values at n̄(x) and w n(x) for Φ_{i,l}.
    SectionValues {
        #[arg(long, default_value_t = 2)]
        i: i32,
        #[arg(long, default_value_t = 1)]
        l: i32,
        /// Valuation of x.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        xv: i32,
        /// Unit part of x (0 for x = 0).
        #[arg(long, default_value_t = 1)]
        xu: i64,
    },
    /// Cell zeta integral of Howe data.
    HoweZeta {
        #[arg(long, value_enum, default_value_t = Group::Gl2)]
        group: Group,
        #[arg(long, default_value_t = 1)]
        m: i32,
        #[arg(long)]
        i: Option<i32>,
    },
    /// Run a verification suite and write its report.
    RunSuite {
        /// One of the suite names, or `all`.
        name: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Group {
    Gl2,
    U11,
}

pub fn parse_rational(s: &str) -> Result<Cyc> {
    let bad = || Error::Invalid(format!("not a rational number: {s}"));
    let (a, b) = match s.split_once('/') {
        Some((a, b)) => (a.trim().parse::<i64>().map_err(|_| bad())?, b.trim().parse::<i64>().map_err(|_| bad())?),
        None => (s.trim().parse::<i64>().map_err(|_| bad())?, 1),
    };
    if b == 0 {
        return Err(Error::DivisionByZero);
    }
    Ok(Cyc::from_ratio(a, b))
}

/// Process exit status: 0 all cases match, 1 some mismatch, 2 bad configuration.
pub fn run(cli: Cli) -> i32 {
    let cfg = cli.global.config();
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e}");
        return 2;
    }
    let result = match &cli.command {
        Command::RunSuite { name } => {
            let names: Vec<&str> = if name == "all" { SUITES.to_vec() } else { vec![name.as_str()] };
            if let Some(bad) = names.iter().find(|n| !SUITES.contains(n)) {
                eprintln!("config error: unknown suite {bad}; known: {}", SUITES.join(", "));
                return 2;
            }
            let mut status = 0;
            for n in names {
                match run_suite(n, &cfg) {
                    Ok(r) => {
                        print_summary(&r);
                        if let Err(e) = emit(&r, &cli.global.out, cli.global.format) {
                            eprintln!("{e}");
                            return 2;
                        }
                        if !r.all_match() {
                            status = 1;
                        }
                    }
                    Err(e) => {
                        eprintln!("{n}: {e}");
                        status = 1;
                    }
                }
            }
            return status;
        }
        cmd => suites::single(cmd, &cfg),
    };
    match result {
        Ok(r) => {
            let r = r.finish();
            match cli.global.format {
                Format::Json => println!("{}", r.to_json()),
                Format::Csv => print!("{}", r.to_csv()),
            }
            if r.all_match() {
                0
            } else {
                1
            }
        }
        Err(e @ (Error::Invalid(_) | Error::NotPrime(_) | Error::Precision(_))) => {
            eprintln!("config error: {e}");
            2
        }
        Err(e) => {
            eprintln!("{e}");
            1
        }
    }
}

fn print_summary(r: &Report) {
    println!(
        "{:<18} {:>6} cases {:>5} mismatches  {}",
        r.suite, r.summary.cases, r.summary.mismatches, r.anchor
    );
    for c in r.mismatches().take(5) {
        println!("    {}: expected {}, got {}", c.id, c.expected, c.actual);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_csv(line: &str) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut quoted = false;
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            match (c, quoted) {
                ('"', true) if chars.peek() == Some(&'"') => {
                    chars.next();
                    out.last_mut().unwrap().push('"');
                }
                ('"', _) => quoted = !quoted,
                (',', false) => out.push(String::new()),
                _ => out.last_mut().unwrap().push(c),
            }
        }
        out
    }

    fn small() -> RunConfig {
        RunConfig { max_degree: 2, ..RunConfig::default() }
    }

    #[test]
    fn json_round_trip() {
        let r = run_suite("gauss", &small()).unwrap();
        let back = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(back.to_json(), r.to_json());
        assert_eq!(back.summary.cases, r.cases.len());
        assert!(Report::from_json("{").is_err());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let mut r = run_suite("tate-gamma", &small()).unwrap();
        r.push(Case::check("id, with \"quotes\"", "a,b", "c", true));
        let csv = r.to_csv();
        let width = split_csv(Report::CSV_HEADER).len();
        assert_eq!(width, 7);
        for line in csv.lines() {
            assert_eq!(split_csv(line).len(), width, "{line}");
        }
        assert_eq!(csv.lines().count(), r.cases.len() + 1);
    }

    #[test]
    fn suites_are_deterministic() {
        let cfg = small();
        for name in ["gauss", "sections", "transform"] {
            let a = run_suite(name, &cfg).unwrap().to_json();
            let b = run_suite(name, &cfg).unwrap().to_json();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn float_backend_agrees_on_gauss() {
        let exact = run_suite("gauss", &small()).unwrap();
        let float = run_suite("gauss", &RunConfig { backend: Backend::Float, ..small() }).unwrap();
        assert!(exact.all_match() && float.all_match());
        assert!(float.cases.iter().all(|c| c.float_dev <= 1e-9));
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig { p: 4, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { precision: 0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("-3/6").unwrap(), Cyc::from_ratio(-1, 2));
        assert_eq!(parse_rational("7").unwrap(), Cyc::from_int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from(["weilzeta", "--p", "5", "howe-zeta", "--group", "u11", "--m", "1"]).unwrap();
        assert_eq!(cli.global.config().p, 5);
        assert!(matches!(cli.command, Command::HoweZeta { group: Group::U11, m: 1, i: None }));
        assert!(Cli::try_parse_from(["weilzeta", "run-suite"]).is_err());
    }

    #[test]
    fn emit_writes_file() {
        let dir = std::env::temp_dir().join(format!("weilzeta-emit-{}", std::process::id()));
        let r = run_suite("transform", &small()).unwrap();
        let path = emit(&r, &dir, Format::Csv).unwrap();
        assert!(path.ends_with("transform.csv"));
        assert_eq!(std::fs::read_to_string(&path).unwrap(), r.to_csv());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
