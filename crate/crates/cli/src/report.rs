//! The reporting subcommands: `compare` reads a finished run's trace back
//! and tabulates how the methods relate; `estimate-noise` runs the
//! bidiagonalization just far enough to extract the noise estimate.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gkreg::{
    detect_noise_revealing, noise_estimate, phi_factors, power_spectrum, residual_noise_match,
    Vector,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::runner::{assemble, render_vector_csv, write_text};

/// One parsed trace row; `None` marks an empty CSV field.
#[derive(Debug, Clone, Default)]
pub struct TraceRow {
    pub k: usize,
    pub res_craig: Option<f64>,
    pub res_lsqr: Option<f64>,
    pub atres_lsmr: Option<f64>,
    pub err_craig: Option<f64>,
    pub err_lsqr: Option<f64>,
    pub err_lsmr: Option<f64>,
}

const EXPECTED_HEADER: &str =
    "k,alpha_k,beta_kplus1,phi0_k,psi0_k,res_craig,res_lsqr,atres_lsmr,err_craig,err_lsqr,err_lsmr,rank_Sk";

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != EXPECTED_HEADER {
        return Err(CliError::Validation(format!(
            "trace header mismatch: expected '{EXPECTED_HEADER}', got '{header}'"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 12 {
            return Err(CliError::Validation(format!(
                "trace row {} has {} fields, expected 12",
                i + 2,
                cols.len()
            )));
        }
        let num = |s: &str| -> Result<Option<f64>, CliError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| {
                    CliError::Validation(format!("trace row {}: bad number '{s}'", i + 2))
                })
            }
        };
        rows.push(TraceRow {
            k: cols[0].parse().map_err(|_| {
                CliError::Validation(format!("trace row {}: bad iteration '{}'", i + 2, cols[0]))
            })?,
            res_craig: num(cols[5])?,
            res_lsqr: num(cols[6])?,
            atres_lsmr: num(cols[7])?,
            err_craig: num(cols[8])?,
            err_lsqr: num(cols[9])?,
            err_lsmr: num(cols[10])?,
        });
    }
    Ok(rows)
}

/// Pulls one `key = value` entry out of a summary file's text.
fn summary_value(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|line| {
        let (k, v) = line.split_once('=')?;
        (k.trim() == key).then(|| v.trim().to_string())
    })
}

struct MethodSeries<'a> {
    name: &'static str,
    /// Residual-like norm: actual residual for craig/lsqr, the transposed
    /// residual for lsmr (the quantity it minimizes).
    res: Box<dyn Fn(&TraceRow) -> Option<f64> + 'a>,
    err: Box<dyn Fn(&TraceRow) -> Option<f64> + 'a>,
}

fn best_by<F: Fn(&TraceRow) -> Option<f64>>(rows: &[TraceRow], get: &F) -> Option<(usize, f64)> {
    rows.iter()
        .filter(|r| r.k >= 1)
        .filter_map(|r| get(r).map(|v| (r.k, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Iteration whose residual norm comes closest to the noise norm — the
/// discrepancy-principle stop.
fn discrepancy_stop<F: Fn(&TraceRow) -> Option<f64>>(
    rows: &[TraceRow],
    get: &F,
    eta_norm: f64,
) -> Option<(usize, f64)> {
    rows.iter()
        .filter(|r| r.k >= 1)
        .filter_map(|r| get(r).map(|v| (r.k, v)))
        .min_by(|a, b| (a.1 - eta_norm).abs().total_cmp(&(b.1 - eta_norm).abs()))
}

/// Last iteration through which the craig and lsqr error curves stay within
/// 10% of each other (falls back to residual curves when no ground truth was
/// available).
fn agreement_window(rows: &[TraceRow]) -> Option<(usize, &'static str)> {
    let on_err = rows.iter().any(|r| r.err_craig.is_some() && r.err_lsqr.is_some());
    let pick = |r: &TraceRow| -> Option<(f64, f64)> {
        if on_err {
            Some((r.err_craig?, r.err_lsqr?))
        } else {
            Some((r.res_craig?, r.res_lsqr?))
        }
    };
    let mut window = None;
    for r in rows.iter().filter(|r| r.k >= 1) {
        let Some((c, l)) = pick(r) else { break };
        if (c - l).abs() <= 0.10 * l {
            window = Some(r.k);
        } else {
            break;
        }
    }
    window.map(|k| (k, if on_err { "error" } else { "residual" }))
}

/// Builds the `compare` report for a run directory; `twin` adds a second
/// run's detection for side-by-side commentary.
pub fn compare_report(dir: &Path, twin: Option<&Path>) -> Result<String, CliError> {
    let trace_path = dir.join("trace.csv");
    let text = fs::read_to_string(&trace_path).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", trace_path.display()))
    })?;
    let rows = parse_trace(&text)?;
    let summary = fs::read_to_string(dir.join("summary.txt")).unwrap_or_default();
    let eta_norm = summary_value(&summary, "eta_norm").and_then(|v| v.parse::<f64>().ok());
    let k_rev = summary_value(&summary, "k_rev");

    let series = [
        MethodSeries {
            name: "craig",
            res: Box::new(|r: &TraceRow| r.res_craig),
            err: Box::new(|r: &TraceRow| r.err_craig),
        },
        MethodSeries {
            name: "lsqr",
            res: Box::new(|r: &TraceRow| r.res_lsqr),
            err: Box::new(|r: &TraceRow| r.err_lsqr),
        },
        MethodSeries {
            name: "lsmr",
            res: Box::new(|r: &TraceRow| r.atres_lsmr),
            err: Box::new(|r: &TraceRow| r.err_lsmr),
        },
    ];
    let present: Vec<&MethodSeries> = series
        .iter()
        .filter(|s| rows.iter().any(|r| (s.res)(r).is_some() || (s.err)(r).is_some()))
        .collect();
    if present.len() < 2 {
        return Err(CliError::Validation(format!(
            "comparison needs at least two methods in the trace, found {}",
            present.len()
        )));
    }

    let iterations = rows.iter().map(|r| r.k).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "trace: {} ({} iterations, methods: {})",
        trace_path.display(),
        iterations,
        present.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
    );
    if let Some(k) = &k_rev {
        let _ = writeln!(out, "noise-revealing iteration: {k}");
    }
    for s in &present {
        let mut parts = Vec::new();
        if let Some((k, v)) = best_by(&rows, &s.err) {
            parts.push(format!("best error {v:e} at k = {k}"));
        }
        if let Some((k, v)) = best_by(&rows, &s.res) {
            let what = if s.name == "lsmr" { "transposed residual" } else { "residual" };
            parts.push(format!("best {what} {v:e} at k = {k}"));
        }
        if s.name != "lsmr" {
            if let Some(eta_norm) = eta_norm {
                if let Some((k, v)) = discrepancy_stop(&rows, &s.res, eta_norm) {
                    parts.push(format!(
                        "discrepancy stop k = {k} (residual {v:e} vs noise norm {eta_norm:e})"
                    ));
                }
            }
        }
        let _ = writeln!(out, "{}: {}", s.name, parts.join("; "));
    }
    if let Some((k, curves)) = agreement_window(&rows) {
        let _ = writeln!(
            out,
            "craig/lsqr agreement window: k <= {k} (within 10% on {curves} curves)"
        );
    } else {
        let _ = writeln!(out, "craig/lsqr agreement window: none (curves differ from k = 1)");
    }

    if let Some(twin_dir) = twin {
        let twin_summary =
            fs::read_to_string(twin_dir.join("summary.txt")).map_err(|e| {
                CliError::Validation(format!(
                    "cannot read {}: {e}",
                    twin_dir.join("summary.txt").display()
                ))
            })?;
        let twin_rev = summary_value(&twin_summary, "k_rev").unwrap_or_else(|| "none".into());
        let this_rev = k_rev.unwrap_or_else(|| "none".into());
        let _ = writeln!(out, "twin {}: k_rev {} vs {} here", twin_dir.display(), twin_rev, this_rev);
        if let (Ok(a), Ok(b)) = (this_rev.parse::<i64>(), twin_rev.parse::<i64>()) {
            if a != b {
                let _ = writeln!(
                    out,
                    "twin note: detection shifts by {} iteration(s) between the runs \
                     (loss of orthogonality delays the revealing iteration)",
                    (a - b).abs()
                );
            }
        }
    }
    Ok(out)
}

/// Runs the pipeline far enough to write the noise estimate at `k` (detected
/// `k_rev` when not given), plus the difference vector and a match report
/// when the true noise is known.
pub fn estimate_noise(cfg: &ExperimentConfig, k: Option<usize>) -> Result<Vec<String>, CliError> {
    let out_dir = cfg.outputs.clone().ok_or_else(|| {
        CliError::Validation("'outputs' is required (set outputs= or pass --outputs)".to_string())
    })?;
    let asm = assemble(cfg)?;
    let state = gkreg::bidiagonalize(&asm.op, &asm.b, cfg.reorth, cfg.kmax)
        .map_err(CliError::numerical)?;
    let detected = detect_noise_revealing(&phi_factors(&state)).map_err(CliError::numerical)?;
    let k = match k.or(detected.k_rev) {
        Some(k) => k,
        None => {
            return Err(CliError::Numerical(
                "no noise-revealing iteration was detected and no --k was given".to_string(),
            ))
        }
    };
    let est = noise_estimate(&state, k).map_err(CliError::numerical)?;

    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut printed = Vec::new();
    let est_path = out_dir.join("eta_est.csv");
    write_text(&est_path, &render_vector_csv("eta_est", &est))?;
    printed.push(format!("wrote {} (k = {k})", est_path.display()));

    match &asm.eta {
        Some(eta) => {
            let diff = eta.sub(&est);
            write_text(&out_dir.join("eta_diff.csv"), &render_vector_csv("eta_diff", &diff))?;
            printed.push(format!("wrote {}", out_dir.join("eta_diff.csv").display()));
            let report = render_match_report(k, eta, &est, &diff)?;
            write_text(&out_dir.join("match.txt"), &report)?;
            printed.push(format!("wrote {}", out_dir.join("match.txt").display()));
            printed.extend(report.lines().map(|l| l.to_string()));
        }
        None => {
            printed.push("noise vector unknown; match report omitted".to_string());
        }
    }
    Ok(printed)
}

/// Power above the median frequency, the part of the spectrum the estimate
/// is expected to reproduce almost exactly at the revealing iteration.
fn high_power(v: &Vector) -> Result<f64, CliError> {
    let sp = power_spectrum(v).map_err(CliError::numerical)?;
    Ok(sp.band_power(sp.len_padded / 4 + 1, sp.power.len() - 1))
}

fn render_match_report(
    k: usize,
    eta: &Vector,
    est: &Vector,
    diff: &Vector,
) -> Result<String, CliError> {
    let m = residual_noise_match(eta, est).map_err(CliError::numerical)?;
    let eta_high = high_power(eta)?;
    let diff_high = high_power(diff)?;
    let mut s = String::new();
    let _ = writeln!(s, "k = {k}");
    let _ = writeln!(s, "eta_norm = {:e}", eta.norm());
    let _ = writeln!(s, "l2_diff = {:e}", m.l2_diff);
    let _ = writeln!(s, "l2_rel = {:e}", m.l2_diff / eta.norm());
    let _ = writeln!(s, "high_power_eta = {eta_high:e}");
    let _ = writeln!(s, "high_power_diff = {diff_high:e}");
    if eta_high > 0.0 {
        let _ = writeln!(s, "high_power_ratio = {:e}", diff_high / eta_high);
    }
    if let Some(frac) = m.highfreq_ratio {
        let _ = writeln!(s, "diff_high_fraction = {frac:e}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> String {
        let mut t = String::from(EXPECTED_HEADER);
        t.push('\n');
        // k, alpha, beta, phi, psi, res_c, res_l, atres_m, err_c, err_l, err_m, rank
        t.push_str("0,,1e0,1e0,5e-1,1e1,1e1,5e0,2e1,2e1,2e1,\n");
        t.push_str("1,1e0,5e-1,2e0,1e0,5e0,5.2e0,2e0,1e1,1.05e1,1.1e1,1\n");
        t.push_str("2,9e-1,4e-1,4e0,2e0,2e0,2.1e0,1e0,6e0,6.2e0,7e0,2\n");
        t.push_str("3,8e-1,3e-1,8e0,4e0,1.5e0,1.2e0,5e-1,9e0,4e0,5e0,3\n");
        t
    }

    #[test]
    fn trace_roundtrip_preserves_gaps() {
        let rows = parse_trace(&sample_trace()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].res_craig, Some(10.0));
        assert_eq!(rows[2].err_lsqr, Some(6.2));
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let err = parse_trace("k,other\n1,2\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn agreement_window_stops_at_first_divergence() {
        let rows = parse_trace(&sample_trace()).unwrap();
        // Errors agree within 10% at k = 1 and 2 (gaps 4.8%, 3.2%) and break
        // at k = 3 (9 vs 4).
        assert_eq!(agreement_window(&rows), Some((2, "error")));
    }

    #[test]
    fn discrepancy_stop_picks_the_closest_residual() {
        let rows = parse_trace(&sample_trace()).unwrap();
        let stop = discrepancy_stop(&rows, &|r: &TraceRow| r.res_craig, 1.9).unwrap();
        assert_eq!(stop.0, 2);
    }

    #[test]
    fn best_by_ignores_the_zero_row() {
        let rows = parse_trace(&sample_trace()).unwrap();
        let (k, v) = best_by(&rows, &|r: &TraceRow| r.err_craig).unwrap();
        assert_eq!((k, v), (2, 6.0));
    }
}
