//! Minimal SVG polyline plots of mean thrust curves and impulse differences,
//! for desk inspection of batch results.

use std::io::Write;
use std::path::Path;

use webfoot::metrics::{MeanCurve, PhaseCurve};
use webfoot::TendonConfigId;

use crate::HarnessError;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn polyline(buf: &mut Vec<u8>, frame: &Frame, xs: &[f64], ys: &[f64], color: &str) -> std::io::Result<()> {
    write!(buf, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points=""#)?;
    for (x, y) in xs.iter().zip(ys) {
        write!(buf, "{:.2},{:.2} ", frame.x(*x), frame.y(*y))?;
    }
    writeln!(buf, "\"/>")?;
    Ok(())
}

fn chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<f64>, Vec<f64>)],
) -> std::io::Result<Vec<u8>> {
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut x_max: f64 = 0.0;
    for (_, xs, ys) in series {
        for v in ys {
            y_min = y_min.min(*v);
            y_max = y_max.max(*v);
        }
        for v in xs {
            x_max = x_max.max(*v);
        }
    }
    if !y_min.is_finite() || y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let frame = Frame {
        x_min: 0.0,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };

    let mut buf = Vec::new();
    writeln!(
        buf,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(buf, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        buf,
        r#"<text x="{:.0}" y="24" font-family="sans-serif" font-size="15">{title}</text>"#,
        MARGIN
    )?;
    // Axes.
    writeln!(
        buf,
        r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/>"#,
        MARGIN,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    )?;
    writeln!(
        buf,
        r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/>"#,
        MARGIN,
        MARGIN,
        HEIGHT - MARGIN
    )?;
    // Zero line when it is inside the frame.
    if frame.y_min < 0.0 && frame.y_max > 0.0 {
        writeln!(
            buf,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#bbbbbb" stroke-dasharray="4 4"/>"##,
            MARGIN,
            frame.y(0.0),
            WIDTH - MARGIN,
            frame.y(0.0)
        )?;
    }
    writeln!(
        buf,
        r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12">{x_label}</text>"#,
        WIDTH / 2.0 - 40.0,
        HEIGHT - 18.0
    )?;
    writeln!(
        buf,
        r#"<text x="14" y="{:.0}" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {:.0})">{y_label}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;
    // Extremal y tick labels.
    for v in [frame.y_min + pad, frame.y_max - pad] {
        writeln!(
            buf,
            r#"<text x="4" y="{:.0}" font-family="sans-serif" font-size="11">{v:.3}</text>"#,
            frame.y(v) + 4.0
        )?;
    }
    for (i, (name, xs, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut buf, &frame, xs, ys, color)?;
        writeln!(
            buf,
            r#"<text x="{:.0}" y="{:.0}" font-family="sans-serif" font-size="12" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * i as f64
        )?;
    }
    writeln!(buf, "</svg>")?;
    Ok(buf)
}

pub fn write_thrust_curves(
    path: &Path,
    curves: &[(TendonConfigId, MeanCurve)],
) -> Result<(), HarnessError> {
    let series: Vec<(String, Vec<f64>, Vec<f64>)> = curves
        .iter()
        .map(|(id, c)| {
            let dt = c.period_s / c.bins() as f64;
            let xs: Vec<f64> = (0..c.bins()).map(|i| (i as f64 + 0.5) * dt).collect();
            (id.to_string(), xs, c.mean.clone())
        })
        .collect();
    let buf = chart("Mean thrust over the gait cycle", "time in cycle [s]", "thrust [N]", &series)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn write_impulse_curves(
    path: &Path,
    pairs: &[(TendonConfigId, TendonConfigId, PhaseCurve)],
) -> Result<(), HarnessError> {
    let series: Vec<(String, Vec<f64>, Vec<f64>)> = pairs
        .iter()
        .map(|(a, b, c)| {
            let dt = c.period_s / c.values.len() as f64;
            let xs: Vec<f64> = (0..c.values.len()).map(|i| (i as f64 + 1.0) * dt).collect();
            (format!("{a} - {b}"), xs, c.values.clone())
        })
        .collect();
    let buf = chart(
        "Impulse difference over the gait cycle",
        "time in cycle [s]",
        "impulse difference [N·s]",
        &series,
    )?;
    std::fs::write(path, buf)?;
    Ok(())
}
