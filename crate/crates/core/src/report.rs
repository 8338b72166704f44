//! CSV and SVG output for harness runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::{MetricsRow, ReplicationRecord, Scenario};

pub const REPLICATION_COLUMNS: [&str; 15] = [
    "scenario_id",
    "sigma_x2",
    "phi_u",
    "phi_c",
    "phi_y",
    "exposure_kind",
    "method",
    "variant",
    "rep",
    "beta_hat",
    "se",
    "lambda",
    "edf_smooth",
    "elapsed_s",
    "failed",
];

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "scenario_id",
    "method",
    "variant",
    "n_reps",
    "mean_beta",
    "bias",
    "rmse",
    "se_ratio",
    "q25",
    "q75",
    "mean_elapsed",
    "mc_se_bias",
    "failure_count",
];

/// 17 significant digits, `NA` for missing or non-finite values.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NA".to_string()
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), format_number)
}

/// Inverse of [`format_number`].
pub fn parse_number(s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Io(format!("not a number: {s:?}")))
}

fn scenario_lookup(scenarios: &[Scenario]) -> BTreeMap<&str, &Scenario> {
    scenarios.iter().map(|s| (s.id.as_str(), s)).collect()
}

pub fn write_replications<W: Write>(
    out: W,
    scenarios: &[Scenario],
    records: &[ReplicationRecord],
) -> Result<()> {
    let lookup = scenario_lookup(scenarios);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(REPLICATION_COLUMNS)?;
    for r in records {
        let sc = lookup
            .get(r.scenario_id.as_str())
            .ok_or_else(|| Error::Io(format!("record for unknown scenario {}", r.scenario_id)))?;
        w.write_record([
            r.scenario_id.clone(),
            format_number(sc.sigma_x2),
            format_opt(sc.phi_u),
            format_opt(sc.phi_c),
            format_opt(sc.phi_y),
            sc.exposure_kind.label().to_string(),
            r.method.label().to_string(),
            r.variant.clone(),
            r.rep.to_string(),
            format_number(r.beta_hat),
            format_number(r.se),
            format_opt(r.lambda),
            format_opt(r.edf_smooth),
            format_number(r.elapsed),
            u8::from(r.failed).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.scenario_id.clone(),
            r.method.label().to_string(),
            r.variant.clone(),
            r.n_reps.to_string(),
            format_number(r.mean_beta),
            format_number(r.bias),
            format_number(r.rmse),
            format_number(r.se_ratio),
            format_number(r.q25),
            format_number(r.q75),
            format_number(r.mean_elapsed),
            format_number(r.mc_se_bias),
            r.failure_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 10] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
    "#1f78b4", "#b2df8a",
];

fn opt_key(v: Option<f64>) -> (u8, u64) {
    // absent components sort after the present ones
    v.map_or((1, 0), |x| (0, x.to_bits()))
}

fn opt_label(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// One SVG document: a panel per scenario laid out by `φ^u` (rows, with
/// `φ^y` when present) and `φ^c` (columns), each showing the mean and
/// interquartile range of the estimates per method and a dashed line at
/// the true effect.
pub fn render_figure(title: &str, scenarios: &[&Scenario], rows: &[MetricsRow]) -> String {
    let mut row_keys: Vec<(Option<f64>, Option<f64>)> =
        scenarios.iter().map(|s| (s.phi_u, s.phi_y)).collect();
    row_keys.sort_by_key(|(u, y)| (opt_key(*u), opt_key(*y)));
    row_keys.dedup();
    let mut col_keys: Vec<Option<f64>> = scenarios.iter().map(|s| s.phi_c).collect();
    col_keys.sort_by_key(|c| opt_key(*c));
    col_keys.dedup();

    let mut series: Vec<String> = Vec::new();
    for r in rows {
        let label = format!("{} {}", r.method.label(), r.variant);
        if scenarios.iter().any(|s| s.id == r.scenario_id) && !series.contains(&label) {
            series.push(label);
        }
    }
    let mine: Vec<&MetricsRow> = rows
        .iter()
        .filter(|r| scenarios.iter().any(|s| s.id == r.scenario_id))
        .collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in scenarios {
        lo = lo.min(s.beta);
        hi = hi.max(s.beta);
    }
    for r in &mine {
        for v in [r.q25, r.q75, r.mean_beta] {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let pad = ((hi - lo) * 0.08).max(0.05);
    let (lo, hi) = (lo - pad, hi + pad);

    let (pw, ph) = (230.0, 190.0);
    let (left, top, gap) = (70.0, 60.0 + 16.0 * ((series.len() + 2) / 3) as f64, 14.0);
    let width = left + col_keys.len() as f64 * (pw + gap) + 20.0;
    let height = top + row_keys.len() as f64 * (ph + gap) + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="14" font-weight="bold">{}</text>"#,
        left,
        escape(title)
    );
    for (i, label) in series.iter().enumerate() {
        let x = left + (i % 3) as f64 * 220.0;
        let y = 40.0 + (i / 3) as f64 * 16.0;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{c}"/>"#,
            y - 9.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}">{}</text>"#,
            x + 14.0,
            escape(label)
        );
    }
    let ticks = nice_ticks(lo, hi);
    for (ri, (phi_u, phi_y)) in row_keys.iter().enumerate() {
        for (ci, phi_c) in col_keys.iter().enumerate() {
            let x0 = left + ci as f64 * (pw + gap);
            let y0 = top + ri as f64 * (ph + gap);
            let ymap = |v: f64| y0 + 18.0 + (ph - 24.0) * (hi - v) / (hi - lo);
            let mut head = format!("φu={} φc={}", opt_label(*phi_u), opt_label(*phi_c));
            if phi_y.is_some() {
                head.push_str(&format!(" φy={}", opt_label(*phi_y)));
            }
            let _ = writeln!(
                svg,
                r##"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="#f7f7f7" stroke="#999999"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}">{}</text>"#,
                x0 + 6.0,
                y0 + 13.0,
                escape(&head)
            );
            if ci == 0 {
                for t in &ticks {
                    let y = ymap(*t);
                    let _ = writeln!(
                        svg,
                        r##"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="#333333"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
                        x0 - 4.0,
                        x0 - 6.0,
                        y + 4.0,
                        t
                    );
                }
            }
            let Some(sc) = scenarios
                .iter()
                .find(|s| s.phi_u == *phi_u && s.phi_y == *phi_y && s.phi_c == *phi_c)
            else {
                let _ = writeln!(
                    svg,
                    r##"<text x="{}" y="{}" text-anchor="middle" fill="#999999">not simulated</text>"##,
                    x0 + pw / 2.0,
                    y0 + ph / 2.0
                );
                continue;
            };
            let yb = ymap(sc.beta);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{yb}" x2="{}" y2="{yb}" stroke="#000000" stroke-dasharray="5,4"/>"##,
                x0 + pw
            );
            let slot = pw / (series.len() as f64 + 1.0);
            for (si, label) in series.iter().enumerate() {
                let Some(r) = mine.iter().find(|r| {
                    r.scenario_id == sc.id
                        && format!("{} {}", r.method.label(), r.variant) == *label
                }) else {
                    continue;
                };
                if !r.mean_beta.is_finite() {
                    continue;
                }
                let x = x0 + slot * (si as f64 + 1.0);
                let c = PALETTE[si % PALETTE.len()];
                if r.q25.is_finite() && r.q75.is_finite() {
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{c}" stroke-width="3"/>"#,
                        ymap(r.q25),
                        ymap(r.q75)
                    );
                }
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{x}" cy="{}" r="3.5" fill="{c}" stroke="#000000" stroke-width="0.5"/>"##,
                    ymap(r.mean_beta)
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">estimated effect (mean, IQR)</text>"#,
        top + row_keys.len() as f64 * (ph + gap) / 2.0,
        top + row_keys.len() as f64 * (ph + gap) / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes one figure per distinct `(σ_x², exposure kind)` and returns the
/// paths written.
pub fn write_figures(
    dir: &Path,
    scenarios: &[Scenario],
    rows: &[MetricsRow],
) -> Result<Vec<PathBuf>> {
    let mut groups: BTreeMap<(u64, &str), Vec<&Scenario>> = BTreeMap::new();
    for s in scenarios {
        groups
            .entry((s.sigma_x2.to_bits(), s.exposure_kind.label()))
            .or_default()
            .push(s);
    }
    let mut paths = Vec::new();
    for ((bits, kind), members) in groups {
        let sx = f64::from_bits(bits);
        let (name, title) = if kind == "continuous" {
            (format!("figure_sigma_x2_{sx}.svg"), format!("σx² = {sx}"))
        } else {
            (format!("figure_{kind}.svg"), format!("{kind} exposure"))
        };
        let path = dir.join(name);
        std::fs::write(&path, render_figure(&title, &members, rows))?;
        paths.push(path);
    }
    Ok(paths)
}
