//! Sampler report text format: one line per greedy step
//! (`h best_sum_distance candidates_evaluated`), then `key value` totals.

use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::sampler::SamplerReport;

pub fn to_text(report: &SamplerReport) -> String {
    let mut out = String::new();
    for (i, (sum, cand)) in report.per_step_best_sum.iter().zip(&report.per_step_candidates).enumerate() {
        out.push_str(&format!("{} {} {}\n", i + 2, sum, cand));
    }
    out.push_str(&format!("mode {}\n", report.mode));
    out.push_str(&format!("total_candidates_evaluated {}\n", report.candidates_evaluated));
    out.push_str(&format!("peak_candidate_memory_rows {}\n", report.peak_candidate_memory_rows));
    out.push_str(&format!("wall_time_ns {}\n", report.wall_time.as_nanos()));
    out
}

pub fn from_text(text: &str) -> Result<SamplerReport> {
    let bad = |msg: String| Error::Format(format!("report: {msg}"));
    let mut sums = Vec::new();
    let mut cands = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 3 {
            break;
        }
        let nums: Vec<u64> = fields
            .iter()
            .map(|f| f.parse::<u64>().map_err(|_| bad(format!("bad step line {line:?}"))))
            .collect::<Result<_>>()?;
        if nums[0] != sums.len() as u64 + 2 {
            return Err(bad(format!("step {} out of sequence", nums[0])));
        }
        sums.push(nums[1]);
        cands.push(nums[2]);
        lines.next();
    }
    let mut value = |key: &str| -> Result<String> {
        let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected {key}, got {line:?}")))
    };
    let mode = value("mode")?.parse().map_err(|e: Error| bad(e.to_string()))?;
    let parse_u = |s: String| s.parse::<u64>().map_err(|_| bad(format!("bad number {s:?}")));
    let candidates_evaluated = parse_u(value("total_candidates_evaluated")?)?;
    let peak_candidate_memory_rows = parse_u(value("peak_candidate_memory_rows")?)?;
    let nanos = value("wall_time_ns")?.parse::<u128>().map_err(|_| bad("bad wall time".into()))?;
    let report = SamplerReport {
        mode,
        per_step_best_sum: sums,
        per_step_candidates: cands,
        candidates_evaluated,
        wall_time: Duration::new((nanos / 1_000_000_000) as u64, (nanos % 1_000_000_000) as u32),
        peak_candidate_memory_rows,
    };
    if to_text(&report) != text {
        return Err(bad("not in canonical form".into()));
    }
    Ok(report)
}

pub fn write_report(report: &SamplerReport, path: &Path) -> Result<()> {
    super::write_file(path, to_text(report).as_bytes())
}

pub fn read_report(path: &Path) -> Result<SamplerReport> {
    from_text(&super::read_text(path)?)
}
