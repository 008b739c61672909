//! Per-proof timings over a directory of proofs, one CSV row per proof,
//! backend and mode.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use farkas_core::codec::parse_proof;
use farkas_core::{check_proof, Backend, CheckOptions, Mode, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub file: String,
    pub backend: String,
    pub mode: String,
    pub verdict: String,
    pub nodes: usize,
    pub lemmas_checked: usize,
    pub lemmas_skipped: usize,
    pub max_depth: usize,
    pub equations_appended: usize,
    pub parse_ms: f64,
    pub check_ms: f64,
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read suite {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Every backend and mode pair, restricted by the given filters.
pub fn configs(backend: Option<Backend>, mode: Option<Mode>) -> Vec<(Backend, Mode)> {
    let mut out = Vec::new();
    for b in Backend::ALL {
        for m in Mode::ALL {
            if backend.is_none_or(|x| x == b) && mode.is_none_or(|x| x == m) {
                out.push((b, m));
            }
        }
    }
    out
}

/// Elapsed milliseconds, rounded to whole microseconds.
pub fn millis(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

pub fn run(
    files: &[PathBuf],
    configs: &[(Backend, Mode)],
    repeat: usize,
    max_depth: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for path in files {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for &(backend, mode) in configs {
            let opts = CheckOptions {
                max_depth,
                ..CheckOptions::with_mode(mode)
            };
            let mut best: Option<(f64, f64)> = None;
            let mut last = None;
            for _ in 0..repeat.max(1) {
                let t = Instant::now();
                let p = parse_proof(&text, backend)
                    .with_context(|| format!("cannot load {}", path.display()))?;
                let parse_ms = millis(t);
                let t = Instant::now();
                let report = check_proof(&p, &opts);
                let check_ms = millis(t);
                best = Some(match best {
                    None => (parse_ms, check_ms),
                    Some((pm, cm)) => (pm.min(parse_ms), cm.min(check_ms)),
                });
                last = Some(report);
            }
            let (parse_ms, check_ms) = best.expect("at least one run");
            let report = last.expect("at least one run");
            rows.push(BenchRow {
                file: name.clone(),
                backend: backend.name().into(),
                mode: mode.name().into(),
                verdict: match &report.verdict {
                    Verdict::Valid => "VALID".into(),
                    Verdict::Invalid(f) => f.reason.name().into(),
                },
                nodes: report.stats.nodes_checked,
                lemmas_checked: report.stats.lemmas_checked,
                lemmas_skipped: report.stats.lemmas_skipped,
                max_depth: report.stats.max_depth,
                equations_appended: report.stats.equations_appended,
                parse_ms,
                check_ms,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize()
        .map(|r| r.map_err(anyhow::Error::from))
        .collect()
}

/// Total check time per configuration, in first-seen order.
pub fn totals(rows: &[BenchRow]) -> Vec<(String, String, f64)> {
    let mut out: Vec<(String, String, f64)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(b, m, _)| *b == r.backend && *m == r.mode)
        {
            Some(t) => t.2 += r.check_ms,
            None => out.push((r.backend.clone(), r.mode.clone(), r.check_ms)),
        }
    }
    out
}
