//! Report emission and the batch runner behind the `concmat` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::ConfigFile;
use crate::error::Result;
use crate::harness::experiment::{analyze, prepare, sample_statistics};
use crate::harness::{run_study, ExperimentConfig, OutputFormat, StatisticSpec, StudyReport, TailReport, Verdict};

pub const TAIL_CSV_HEADER: &str = "t,empirical,empirical_upper99,envelope,verdict";

/// CSV with the fixed tail columns. Numbers use Rust's shortest
/// round-trip formatting, so the output does not depend on locale.
pub fn tail_csv(r: &TailReport) -> String {
    let mut s = String::from(TAIL_CSV_HEADER);
    s.push('\n');
    for p in &r.points {
        let _ = writeln!(s, "{},{},{},{},{}", p.t, p.empirical, p.empirical_upper99, p.envelope, p.verdict.as_str());
    }
    s
}

pub fn study_csv(r: &StudyReport) -> String {
    let (header, rows) = r.table();
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Result of one config entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Tail(TailReport),
    Study(StudyReport),
}

impl Report {
    pub fn name(&self) -> &str {
        match self {
            Report::Tail(r) => &r.name,
            Report::Study(r) => &r.name,
        }
    }

    pub fn pass(&self) -> bool {
        match self {
            Report::Tail(r) => r.pass,
            Report::Study(r) => r.pass,
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            Report::Tail(r) => serde_json::to_string_pretty(r),
            Report::Study(r) => serde_json::to_string_pretty(r),
        }
        .expect("reports serialize")
    }

    pub fn to_json_without_timing(&self) -> String {
        match self {
            Report::Tail(r) => r.to_json_without_timing(),
            Report::Study(r) => r.to_json_without_timing(),
        }
    }

    pub fn csv(&self) -> String {
        match self {
            Report::Tail(r) => tail_csv(r),
            Report::Study(r) => study_csv(r),
        }
    }

    pub fn wall_time_s(&self) -> f64 {
        match self {
            Report::Tail(r) => r.wall_time_s,
            Report::Study(r) => r.wall_time_s,
        }
    }

    /// One line of the run summary.
    pub fn summary(&self) -> String {
        match self {
            Report::Tail(r) => {
                let count = |v: Verdict| r.points.iter().filter(|p| p.verdict == v).count();
                let gap = match &r.mean_median {
                    Some(g) if g.pass => "  gap ok",
                    Some(_) => "  gap FAIL",
                    None => "",
                };
                format!(
                    "{:<28} {:<5} {:>3} pass {:>3} fail {:>3} vacuous{gap}  {:.1}s",
                    r.name,
                    if r.pass { "PASS" } else { "FAIL" },
                    count(Verdict::Pass),
                    count(Verdict::Fail),
                    count(Verdict::Vacuous),
                    r.wall_time_s
                )
            }
            Report::Study(r) => format!(
                "{:<28} {:<5} {}{}  {:.1}s",
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                serde_json::to_value(&r.outcome).ok().and_then(|v| v["kind"].as_str().map(String::from)).unwrap_or_default(),
                if r.inconclusive { " (some rows inconclusive)" } else { "" },
                r.wall_time_s
            ),
        }
    }

    /// Writes `<name>.json` and/or `<name>.csv` into `dir`.
    pub fn write(&self, dir: &Path, outputs: &[OutputFormat]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in outputs {
            let (ext, body) = match f {
                OutputFormat::Json => ("json", self.to_json()),
                OutputFormat::Csv => ("csv", self.csv()),
            };
            let path = dir.join(format!("{}.{ext}", self.name()));
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Runs tail experiments that share `(ensemble, trials, seed)` on one set
/// of samples; every statistic is a deterministic function of the matrix,
/// so the reports equal those of separate runs.
pub fn run_experiments(exps: &[ExperimentConfig]) -> Result<Vec<TailReport>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, e) in exps.iter().enumerate() {
        let first = groups.iter_mut().find(|g| {
            let f = &exps[g[0]];
            f.ensemble == e.ensemble && f.trials == e.trials && f.seed == e.seed
        });
        match first {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let mut out: Vec<Option<TailReport>> = vec![None; exps.len()];
    for g in groups {
        let start = Instant::now();
        let preps = g.iter().map(|&i| prepare(&exps[i])).collect::<Result<Vec<_>>>()?;
        let mut union: Vec<StatisticSpec> = Vec::new();
        for p in &preps {
            for s in &p.stats {
                if !union.contains(s) {
                    union.push(s.clone());
                }
            }
        }
        let head = &exps[g[0]];
        let cols = sample_statistics(&head.ensemble, &union, head.trials, head.seed)?;
        let shared = start.elapsed().as_secs_f64();
        for (&i, p) in g.iter().zip(&preps) {
            let t0 = Instant::now();
            let refs: Vec<&[f64]> =
                p.stats.iter().map(|s| cols[union.iter().position(|u| u == s).expect("in union")].as_slice()).collect();
            let mut r = analyze(&exps[i], p, &refs)?;
            r.wall_time_s = shared + t0.elapsed().as_secs_f64();
            out[i] = Some(r);
        }
    }
    Ok(out.into_iter().map(|r| r.expect("every experiment ran")).collect())
}

/// Runs every entry of a config, writing reports into `out` when given.
/// `on_report` sees each report as soon as it is written.
pub fn run_config(cfg: &ConfigFile, out: Option<&Path>, mut on_report: impl FnMut(&Report)) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    let tails = run_experiments(&cfg.experiments)?;
    for (r, e) in tails.into_iter().zip(&cfg.experiments) {
        let r = Report::Tail(r);
        if let Some(dir) = out {
            r.write(dir, &e.outputs)?;
        }
        on_report(&r);
        reports.push(r);
    }
    for s in &cfg.studies {
        let r = Report::Study(run_study(s)?);
        if let Some(dir) = out {
            r.write(dir, &[OutputFormat::Json, OutputFormat::Csv])?;
        }
        on_report(&r);
        reports.push(r);
    }
    Ok(reports)
}
