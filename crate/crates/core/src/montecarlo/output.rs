//! Report CSV, summary block, histogram CSV/SVG and run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::engine::SimulationReport;
use crate::error::Result;
use crate::stats::normal_cdf;

pub const HIST_BINS: usize = 41;
pub const HIST_RANGE: (f64, f64) = (-4.0, 4.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// 41 equal bins over `[−4, 4]`; values outside the range are dropped.
pub fn histogram(zs: &[f64]) -> Vec<HistogramBin> {
    let (lo, hi) = HIST_RANGE;
    let width = (hi - lo) / HIST_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HIST_BINS)
        .map(|i| HistogramBin {
            lo: lo + i as f64 * width,
            hi: if i + 1 == HIST_BINS { hi } else { lo + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &z in zs {
        if (lo..=hi).contains(&z) {
            let i = (((z - lo) / width) as usize).min(HIST_BINS - 1);
            bins[i].count += 1;
        }
    }
    bins
}

pub fn report_csv(r: &SimulationReport) -> String {
    let mut s = String::from("rep,estimate,truth,z,ci_lo,ci_hi,covered\n");
    for rec in &r.records {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{:?},{:?},{}",
            rec.rep, rec.estimate, rec.truth, rec.z, rec.ci_lo, rec.ci_hi, rec.covered
        );
    }
    s
}

pub fn histogram_csv(r: &SimulationReport) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for b in histogram(&r.z_values()) {
        let _ = writeln!(s, "{:?},{:?},{}", b.lo, b.hi, b.count);
    }
    s
}

/// Flat `key=value` lines.
pub fn summary_block(r: &SimulationReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("model", r.model.name().into());
    kv("grid_index", r.grid_index.to_string());
    kv("grid_value", format!("{:?}", r.grid_value));
    kv("loading", r.loading.clone());
    kv("alpha", format!("{:?}", r.alpha));
    kv("truth", format!("{:?}", r.truth));
    kv("s_a", format!("{:?}", r.s_a));
    kv("replications", r.records.len().to_string());
    kv("failures", r.failures.len().to_string());
    kv("failure_rate", format!("{:?}", r.failure_rate));
    kv("coverage", format!("{:?}", r.coverage));
    kv("mean_ci_length", format!("{:?}", r.mean_ci_length));
    kv("mean_std_error", format!("{:?}", r.mean_std_error));
    kv("mean_s_a_hat", format!("{:?}", r.mean_s_a_hat));
    kv("mean_noise_hat", format!("{:?}", r.mean_noise_hat));
    kv("ks_statistic", format!("{:?}", r.ks_statistic));
    kv("ks_critical", format!("{:?}", r.ks_critical));
    kv("ks_pass", r.ks_pass.to_string());
    kv("minimax_length", format!("{:?}", r.minimax_length));
    kv("efficiency_ratio", format!("{:?}", r.efficiency_ratio));
    kv("status", if r.failed { "failed" } else { "ok" }.into());
    s
}

/// Histogram bars with the standard normal expected counts overlaid.
pub fn histogram_svg(r: &SimulationReport) -> String {
    let bins = histogram(&r.z_values());
    let n = r.records.len() as f64;
    let expected: Vec<f64> = bins
        .iter()
        .map(|b| n * (normal_cdf(b.hi) - normal_cdf(b.lo)))
        .collect();
    let top = bins
        .iter()
        .map(|b| b.count as f64)
        .chain(expected.iter().copied())
        .fold(1.0, f64::max);
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let (lo, hi) = HIST_RANGE;
    let x = |v: f64| pad + (v - lo) / (hi - lo) * (w - 2.0 * pad);
    let y = |c: f64| h - pad - c / top * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for b in &bins {
        let (x0, x1, y0) = (x(b.lo), x(b.hi), y(b.count as f64));
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="#9ab" stroke="#456"/>"##,
            x1 - x0,
            h - pad - y0
        );
    }
    let pts: Vec<String> = bins
        .iter()
        .zip(&expected)
        .map(|(b, e)| format!("{:.2},{:.2}", x(0.5 * (b.lo + b.hi)), y(*e)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#c33" stroke-width="2"/>"##,
        pts.join(" ")
    );
    let _ = writeln!(
        s,
        r##"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"##,
        h - pad,
        w - pad
    );
    for t in [-4, -2, 0, 2, 4] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="12" text-anchor="middle">{t}</text>"#,
            x(t as f64),
            h - pad + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{} grid={:?} n_rep={} KS={:.4}</text>"#,
        w / 2.0,
        r.loading,
        r.grid_value,
        r.records.len(),
        r.ks_statistic
    );
    s.push_str("</svg>\n");
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of the canonical configuration text.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.canonical().as_bytes())
}

pub fn manifest_line(cfg: &ExperimentConfig) -> String {
    format!(
        "manifest config_hash={} seed={} version={}",
        config_hash(cfg),
        cfg.seed,
        env!("CARGO_PKG_VERSION")
    )
}

/// Writes per-report CSV/SVG files plus `summary.txt` and `manifest.txt`.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    reports: &[SimulationReport],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut summary = String::new();
    let loadings = cfg.loadings.len().max(1);
    for (i, r) in reports.iter().enumerate() {
        let stem = format!("g{}-l{}", r.grid_index, i % loadings);
        for (ext, body) in [
            ("report.csv", report_csv(r)),
            ("hist.csv", histogram_csv(r)),
            ("hist.svg", histogram_svg(r)),
        ] {
            let p = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&p, body)?;
            written.push(p);
        }
        if !summary.is_empty() {
            summary.push('\n');
        }
        let _ = writeln!(summary, "file={stem}");
        summary.push_str(&summary_block(r));
    }
    let manifest = manifest_line(cfg);
    let _ = writeln!(summary, "\n{manifest}");
    for (name, body) in [("summary.txt", summary), ("manifest.txt", format!("{manifest}\n"))] {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}
