//! Deterministic output writers. Every artefact is a pure function of the
//! report contents: no timestamps, no environment echoes, stable float
//! formatting — identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Pretty-printed JSON plus a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serialising report")?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Comma-separated table with a header row. Cells are written verbatim;
/// numeric cells should come from [`cell`] for stable formatting.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Shortest-roundtrip float formatting: deterministic and lossless.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

const PLOT_W: f64 = 640.0;
const PLOT_H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A minimal hand-rolled line chart: axes, tick labels at the extremes, and
/// one polyline per series. Enough to eyeball a trend without pulling in a
/// plotting stack.
pub fn write_svg_lines(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<f64>, Vec<f64>)],
) -> Result<()> {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.2.iter().copied()).collect();
    anyhow::ensure!(!xs.is_empty(), "plot `{title}` has no data");
    let (x_lo, x_hi) = padded_bounds(&xs);
    let (y_lo, y_hi) = padded_bounds(&ys);
    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (PLOT_W - 2.0 * MARGIN);
    let sy = |y: f64| PLOT_H - MARGIN - (y - y_lo) / (y_hi - y_lo) * (PLOT_H - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n",
        PLOT_W / 2.0
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = PLOT_H - MARGIN,
        r = PLOT_W - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">{x_label}</text>\n",
        PLOT_W / 2.0,
        PLOT_H - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        PLOT_H / 2.0,
        PLOT_H / 2.0
    ));
    // Extreme tick labels.
    for (v, x, y, anchor) in [
        (x_lo, MARGIN, PLOT_H - MARGIN + 16.0, "middle"),
        (x_hi, PLOT_W - MARGIN, PLOT_H - MARGIN + 16.0, "middle"),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{y:.1}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"10\">{v:.4}</text>\n"
        ));
    }
    for (v, y) in [(y_lo, PLOT_H - MARGIN), (y_hi, MARGIN)] {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"10\">{v:.4}</text>\n",
            MARGIN - 6.0,
            y + 4.0
        ));
    }
    // Series.
    for (i, (label, xv, yv)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = xv
            .iter()
            .zip(yv)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             fill=\"{color}\">{label}</text>\n",
            PLOT_W - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn padded_bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Creates the output directory (and parents) and returns it as a buffer.
pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}
