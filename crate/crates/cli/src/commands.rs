//! The five commands.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use hilbert_weak11::measure::{build_weight, StepMeasure};
use hilbert_weak11::verify::{
    certified_lower_bound, check_intcompare, check_mwcompare, check_sign_rule, check_terms, dualcp_ratio,
    gaussian_floor, lower_bound_from_points, run_demo, unit_mass, CheckRecord, CheckSummary, DemoOutcome, Status,
    TermChecks, VerificationReport,
};
use hilbert_weak11::Rational;
use serde::{Deserialize, Serialize};

use crate::args::{Command, RunConfig, FLOOR_CELLS};
use crate::weight_file::{LoadedWeight, WeightFile};
use crate::{Failure, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK};

pub fn dispatch(cfg: &RunConfig) -> Result<i32, Failure> {
    if let Some(n) = cfg.threads {
        // a pool that already exists (repeated in-process runs) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cfg.command {
        Command::Build => run_build(cfg),
        Command::Verify => run_verify(cfg),
        Command::Ratio => run_ratio(cfg),
        Command::Demo => run_demo_command(cfg),
        Command::Scan => run_scan(cfg),
    }
}

pub struct Progress {
    enabled: bool,
}

impl Progress {
    /// Progress goes to stdout unless `--quiet` is set or stdout receives the result.
    pub fn new(cfg: &RunConfig, result_path: Option<&Path>) -> Self {
        Progress { enabled: !cfg.quiet && result_path.is_some() }
    }

    pub fn silent() -> Self {
        Progress { enabled: false }
    }

    pub fn say(&self, msg: impl AsRef<str>) {
        if self.enabled {
            println!("{}", msg.as_ref());
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::io(e.to_string()))
        }
    }
}

fn single_k(cfg: &RunConfig) -> Result<u32, Failure> {
    cfg.k_range.map(|(a, _)| a).ok_or_else(|| Failure::config("--k is required".into()))
}

fn build(cfg: &RunConfig, k: u32, progress: &Progress) -> Result<LoadedWeight, Failure> {
    let params = cfg.params(k, cfg.depth)?;
    progress.say(format!("building k={k} depth={}", cfg.depth));
    let (weight, signs) = build_weight(&params)?;
    Ok(LoadedWeight { k, depth: cfg.depth, base: cfg.base, weight, signs })
}

fn load_or_build(cfg: &RunConfig, progress: &Progress) -> Result<LoadedWeight, Failure> {
    match &cfg.weight {
        Some(path) => {
            progress.say(format!("loading {}", path.display()));
            let lw = WeightFile::read(path)?.into_weight()?;
            if let Some((a, _)) = cfg.k_range {
                if a != lw.k {
                    return Err(Failure::config(format!("--k {a} disagrees with the weight file (k = {})", lw.k)));
                }
            }
            Ok(lw)
        }
        None => build(cfg, single_k(cfg)?, progress),
    }
}

fn with_floor(cfg: &RunConfig, w: &StepMeasure) -> Result<StepMeasure, Failure> {
    match &cfg.floor {
        Some(fl) => Ok(gaussian_floor(w, &fl.c, &fl.window, FLOOR_CELLS)?),
        None => Ok(w.clone()),
    }
}

pub fn run_build(cfg: &RunConfig) -> Result<i32, Failure> {
    let progress = Progress::new(cfg, cfg.out.as_deref());
    let lw = build(cfg, single_k(cfg)?, &progress)?;
    let file = WeightFile::from_weight(lw.k, lw.depth, lw.base, &lw.weight, &lw.signs);
    let text = serde_json::to_string_pretty(&file).map_err(|e| Failure::io(e.to_string()))? + "\n";
    write_output(cfg.out.as_deref(), &text)?;
    progress.say(format!("wrote {} pieces and {} signs", lw.weight.len(), lw.signs.len()));
    Ok(EXIT_OK)
}

/// One summary per check with the extreme measurements rendered exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    #[serde(flatten)]
    pub summary: CheckSummary,
    /// Exact or enclosure text of the record with the largest measured value.
    pub max_measured_text: String,
    pub min_measured_text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub k: u32,
    pub depth: u32,
    pub checks: Vec<String>,
    pub passed: bool,
    pub summaries: Vec<SummaryRecord>,
    pub records: Vec<CheckRecord>,
}

impl ReportDocument {
    pub fn new(k: u32, depth: u32, checks: Vec<String>, report: VerificationReport) -> Self {
        let summaries = report
            .summaries()
            .into_iter()
            .map(|s| {
                let recs: Vec<&CheckRecord> = report.records_for(&s.check).collect();
                let max = recs.iter().max_by(|a, b| a.measured_value.total_cmp(&b.measured_value));
                let min = recs.iter().min_by(|a, b| a.measured_value.total_cmp(&b.measured_value));
                SummaryRecord {
                    max_measured_text: max.map(|r| r.measured.clone()).unwrap_or_default(),
                    min_measured_text: min.map(|r| r.measured.clone()).unwrap_or_default(),
                    summary: s,
                }
            })
            .collect();
        ReportDocument { k, depth, checks, passed: report.passed(), summaries, records: report.records }
    }

    pub fn exit_code(&self) -> i32 {
        let any = |st: Status| self.records.iter().any(|r| r.status == st);
        if any(Status::Fail) {
            EXIT_FAIL
        } else if any(Status::Inconclusive) {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

/// Runs the configured checks on a weight.
pub fn verify_weight(cfg: &RunConfig, lw: &LoadedWeight, progress: &Progress) -> Result<VerificationReport, Failure> {
    let mut report = VerificationReport::new();
    let w = &lw.weight;
    if cfg.runs("intcompare") {
        progress.say("intcompare");
        let m = w.total_mass();
        report.push(
            CheckRecord::new("intcompare.mass", Some(lw.depth), "w_N".into())
                .measured(m.to_string(), m.to_f64())
                .bound("1".into(), 1.0)
                .status(if *m == Rational::from(1) { Status::Pass } else { Status::Fail }),
        );
        report.merge(check_intcompare(w, &lw.signs, lw.k)?);
    }
    if cfg.runs("mwcompare") {
        progress.say("mwcompare");
        report.merge(check_mwcompare(w, &lw.signs, lw.k, &cfg.verify)?);
    }
    let decomposition = cfg.runs("decomposition");
    let which = TermChecks { bounds: cfg.runs("terms"), decomposition, oracle: decomposition };
    if which.bounds || which.decomposition {
        progress.say("six-term split");
        report.merge(check_terms(w, &lw.signs, lw.k, lw.depth, &cfg.verify, which)?.report);
    }
    if cfg.runs("signs") {
        progress.say("sign rule");
        let params = cfg.params(lw.k, lw.depth)?.with_base_support(lw.base);
        report.merge(check_sign_rule(w, &lw.signs, &params)?);
    }
    Ok(report)
}

pub fn run_verify(cfg: &RunConfig) -> Result<i32, Failure> {
    let progress = Progress::new(cfg, cfg.report.as_deref());
    let lw = load_or_build(cfg, &progress)?;
    let report = verify_weight(cfg, &lw, &progress)?;
    let doc = ReportDocument::new(lw.k, lw.depth, cfg.checks.clone(), report);
    for s in &doc.summaries {
        let st = &s.summary;
        if st.failed > 0 || st.inconclusive > 0 || st.flagged > 0 {
            eprintln!(
                "{}: {} failed, {} inconclusive, {} flagged of {}",
                st.check, st.failed, st.inconclusive, st.flagged, st.records
            );
        }
    }
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::io(e.to_string()))? + "\n";
    write_output(cfg.report.as_deref(), &text)?;
    Ok(doc.exit_code())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioOutput {
    pub k: u32,
    pub depth: u32,
    pub pieces: usize,
    pub dualcp_ratio: f64,
    pub dualcp_error: f64,
    pub lower_bound_ratio: f64,
    pub denominator: String,
}

pub fn compute_ratio(cfg: &RunConfig, lw: &LoadedWeight) -> Result<RatioOutput, Failure> {
    let w = with_floor(cfg, &lw.weight)?;
    let r = dualcp_ratio(&w, &cfg.quadrature)?;
    let lb = certified_lower_bound(&w, &lw.signs, lw.k, lw.depth, &cfg.verify)?;
    Ok(RatioOutput {
        k: lw.k,
        depth: lw.depth,
        pieces: w.len(),
        dualcp_ratio: r.ratio,
        dualcp_error: r.error,
        lower_bound_ratio: lb.ratio,
        denominator: r.denominator.to_string(),
    })
}

pub fn run_ratio(cfg: &RunConfig) -> Result<i32, Failure> {
    let progress = Progress::new(cfg, cfg.out.as_deref());
    let lw = load_or_build(cfg, &progress)?;
    progress.say("integrating");
    let out = compute_ratio(cfg, &lw)?;
    let text = serde_json::to_string_pretty(&out).map_err(|e| Failure::io(e.to_string()))? + "\n";
    write_output(cfg.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoDocument {
    pub k: u32,
    pub depth: u32,
    pub certified: bool,
    #[serde(flatten)]
    pub outcome: DemoOutcome,
}

pub fn run_demo_command(cfg: &RunConfig) -> Result<i32, Failure> {
    let progress = Progress::new(cfg, cfg.out.as_deref());
    let lw = load_or_build(cfg, &progress)?;
    let w = with_floor(cfg, &lw.weight)?;
    progress.say("demo pipeline");
    let outcome = run_demo(&w, cfg.grid)?;
    let code = if outcome.theorem.pointwise_failures == 0 && outcome.theorem.window_ok { EXIT_OK } else { EXIT_FAIL };
    let doc = DemoDocument { k: lw.k, depth: lw.depth, certified: false, outcome };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::io(e.to_string()))? + "\n";
    write_output(cfg.out.as_deref(), &text)?;
    Ok(code)
}

/// One row of the `scan` CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub k: u32,
    pub depth: u32,
    pub pieces: usize,
    pub dualcp_ratio: f64,
    pub lower_bound_ratio: f64,
    #[serde(rename = "max_Mw_over_w")]
    pub max_mw_over_w: f64,
    pub min_a2_over_w: f64,
    pub max_a1_over_w: f64,
    pub max_a3_over_w: f64,
    pub max_a5_over_w: f64,
    pub cuperez_ratio: f64,
    pub theorem_ratio: f64,
    pub wall_seconds: Option<f64>,
}

pub fn scan_row(cfg: &RunConfig, k: u32, progress: &Progress) -> Result<ScanRow, Failure> {
    let start = Instant::now();
    let lw = build(cfg, k, progress)?;
    let w = with_floor(cfg, &lw.weight)?;
    progress.say(format!("k={k}: maximal comparison"));
    let mw = check_mwcompare(&w, &lw.signs, k, &cfg.verify)?;
    progress.say(format!("k={k}: term bounds"));
    let terms = check_terms(&w, &lw.signs, k, cfg.depth, &cfg.verify, TermChecks::BOUNDS)?;
    progress.say(format!("k={k}: L² ratio"));
    let r = dualcp_ratio(&w, &cfg.quadrature)?;
    let lb = lower_bound_from_points(&terms.points, &unit_mass(&w))?;
    progress.say(format!("k={k}: demo"));
    let demo = run_demo(&w, cfg.grid)?;
    let rep = &terms.report;
    let get = |v: Option<f64>| v.unwrap_or(f64::NAN);
    Ok(ScanRow {
        k,
        depth: cfg.depth,
        pieces: w.len(),
        dualcp_ratio: r.ratio,
        lower_bound_ratio: lb.ratio,
        max_mw_over_w: get(mw.max_measured("mwcompare")),
        min_a2_over_w: get(rep.min_measured("terms.a2")),
        max_a1_over_w: get(rep.max_measured("terms.a1")),
        max_a3_over_w: get(rep.max_measured("terms.a3")),
        max_a5_over_w: get(rep.max_measured("terms.a5")),
        cuperez_ratio: demo.cuperez.ratio,
        theorem_ratio: demo.theorem.result.ratio,
        wall_seconds: cfg.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

pub fn scan_csv(rows: &[ScanRow]) -> Result<String, Failure> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wr.serialize(r).map_err(|e| Failure::io(e.to_string()))?;
    }
    let bytes = wr.into_inner().map_err(|e| Failure::io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::io(e.to_string()))
}

pub fn parse_scan_csv(text: &str) -> Result<Vec<ScanRow>, Failure> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    rd.deserialize().map(|r| r.map_err(|e| Failure::config(e.to_string()))).collect()
}

pub fn run_scan(cfg: &RunConfig) -> Result<i32, Failure> {
    let progress = Progress::new(cfg, cfg.out.as_deref());
    let (a, b) = cfg.k_range.ok_or_else(|| Failure::config("--k is required".into()))?;
    let mut rows = Vec::new();
    for k in a..=b {
        rows.push(scan_row(cfg, k, &progress)?);
    }
    write_output(cfg.out.as_deref(), &scan_csv(&rows)?)?;
    Ok(EXIT_OK)
}
