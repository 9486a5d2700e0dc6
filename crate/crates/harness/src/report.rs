//! CSV reports and the expected-DS curve.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use drivebench_core::metrics::{expected_ds, optimal_stop_distance, summarize, EpisodeResult, StopModel};
use drivebench_core::sim::InfractionKind;

use crate::episode_io::ResultsHeader;
use crate::error::{HarnessError, Result};
use crate::fsutil::write_atomic;

/// Column names of `report.csv`, one row per episode.
pub fn report_header() -> String {
    let mut cols = vec![
        "config_digest",
        "controller",
        "route_id",
        "seed",
        "route_length_m",
        "distance_m",
        "rc",
        "is",
        "ds",
        "stopped_early",
        "max_lateral_error_m",
    ];
    cols.extend(InfractionKind::ALL.iter().map(|k| k.as_str()));
    cols.join(",")
}

/// Column names of `summary.csv`, one row per controller.
pub fn summary_header() -> String {
    let mut cols: Vec<String> =
        ["config_digest", "controller", "episodes", "mean_ds", "mean_rc", "mean_is", "distance_km"].iter().map(|s| s.to_string()).collect();
    cols.extend(InfractionKind::ALL.iter().map(|k| format!("{}_per_km", k.as_str())));
    cols.join(",")
}

/// Rejects result sets recorded under different configurations.
pub fn common_digest(sets: &[(ResultsHeader, Vec<EpisodeResult>)]) -> Result<String> {
    let first = sets.first().ok_or_else(|| HarnessError::Config("no result files given".into()))?;
    for (h, _) in &sets[1..] {
        if h.config_digest != first.0.config_digest {
            return Err(HarnessError::DigestMismatch(first.0.config_digest.clone(), h.config_digest.clone()));
        }
    }
    Ok(first.0.config_digest.clone())
}

pub fn report_csv(digest: &str, results: &[EpisodeResult]) -> String {
    let mut out = report_header();
    out.push('\n');
    for r in results {
        let mut counts: BTreeMap<InfractionKind, usize> = BTreeMap::new();
        for e in &r.events {
            *counts.entry(e.kind).or_default() += 1;
        }
        let _ = write!(
            out,
            "{digest},{},{},{},{},{},{},{},{},{},{}",
            r.controller, r.route_id, r.seed, r.route_length, r.distance_travelled, r.rc, r.is_score, r.ds, r.stopped_early, r.max_lateral_error
        );
        for k in InfractionKind::ALL {
            let _ = write!(out, ",{}", counts.get(&k).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

/// Aggregates per controller, controllers in name order.
pub fn summary_csv(digest: &str, results: &[EpisodeResult]) -> Result<String> {
    let mut by_controller: BTreeMap<&str, Vec<EpisodeResult>> = BTreeMap::new();
    for r in results {
        by_controller.entry(r.controller.as_str()).or_default().push(r.clone());
    }
    let mut out = summary_header();
    out.push('\n');
    for (controller, rs) in by_controller {
        let s = summarize(&rs)?;
        let _ = write!(out, "{digest},{controller},{},{},{},{},{}", s.episodes, s.mean_ds, s.mean_rc, s.mean_is, s.distance_km);
        for k in InfractionKind::ALL {
            let _ = write!(out, ",{}", s.per_km[&k]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes `report.csv`, `summary.csv` and, given a model, `ds_curve.svg`.
pub fn write_report(out_dir: &Path, sets: &[(ResultsHeader, Vec<EpisodeResult>)], curve: Option<(StopModel, Option<f64>)>) -> Result<()> {
    let digest = common_digest(sets)?;
    let results: Vec<EpisodeResult> = sets.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    write_atomic(&out_dir.join("report.csv"), report_csv(&digest, &results).as_bytes())?;
    write_atomic(&out_dir.join("summary.csv"), summary_csv(&digest, &results)?.as_bytes())?;
    if let Some((model, threshold)) = curve {
        write_atomic(&out_dir.join("ds_curve.svg"), ds_curve_svg(&model, threshold, &digest)?.as_bytes())?;
    }
    Ok(())
}

/// Expected DS against stop distance, with d* and an optional chosen
/// threshold (both km) drawn as vertical lines.
pub fn ds_curve_svg(model: &StopModel, threshold: Option<f64>, digest: &str) -> Result<String> {
    model.validate()?;
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let l = model.route_length;
    let x = |d: f64| M + (W - 2.0 * M) * d / l;
    let y = |ds: f64| H - M - (H - 2.0 * M) * ds / 100.0;
    let n = 200;
    let points: Vec<String> = (0..=n)
        .map(|i| {
            let d = l * i as f64 / n as f64;
            format!("{:.2},{:.2}", x(d), y(expected_ds(model, d)))
        })
        .collect();
    let d_star = optimal_stop_distance(model);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, "<!-- config_digest {digest} lambda {} p {} L {} -->", model.lambda, model.p, l);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<path d="M{M},{M} V{} H{}" fill="none" stroke="black"/>"#, H - M, W - M);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">stop distance (km)</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(svg, r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">expected DS</text>"#, H / 2.0, H / 2.0);
    let _ = writeln!(svg, r#"<text x="{M}" y="{}" font-size="10" text-anchor="middle">0</text>"#, H - M + 14.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{l}</text>"#, W - M, H - M + 14.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{M}" font-size="10" text-anchor="end">100</text>"#, M - 4.0);
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, points.join(" "));
    let _ = writeln!(
        svg,
        r#"<line x1="{0:.2}" y1="{M}" x2="{0:.2}" y2="{1}" stroke="gray" stroke-dasharray="4 3"/><text x="{0:.2}" y="{2}" font-size="10" text-anchor="middle">d* = {3}</text>"#,
        x(d_star),
        H - M,
        M - 6.0,
        d_star
    );
    if let Some(t) = threshold.filter(|t| t.is_finite()) {
        let t = t.clamp(0.0, l);
        let _ = writeln!(
            svg,
            r#"<line x1="{0:.2}" y1="{M}" x2="{0:.2}" y2="{1}" stroke="firebrick"/><text x="{0:.2}" y="{2}" font-size="10" text-anchor="middle">threshold {3}</text>"#,
            x(t),
            H - M,
            M - 18.0,
            t
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
