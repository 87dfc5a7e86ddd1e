//! Self-contained SVG charts of evaluation results.

use std::fmt::Write;

use super::eval::EvalRow;
use crate::simgen::{DatasetKind, NoiseLevel};

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];
const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const LEFT: f64 = 44.0;
const TOP: f64 = 30.0;
const PLOT_W: f64 = 290.0;
const PLOT_H: f64 = 180.0;

/// A named sequence of accuracies, one per x position. `None` leaves a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn y_of(v: f64) -> f64 {
    TOP + PLOT_H * (1.0 - v.clamp(0.0, 1.0))
}

fn axes(out: &mut String, title: &str, x_labels: &[String], x_of: &dyn Fn(usize) -> f64) {
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(title)
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.1}</text>"##,
            LEFT + PLOT_W,
            LEFT - 4.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/><line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + PLOT_H,
        TOP + PLOT_H,
        LEFT + PLOT_W,
        TOP + PLOT_H
    );
    for (i, l) in x_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
            x_of(i),
            TOP + PLOT_H + 14.0,
            escape(l)
        );
    }
}

fn legend(out: &mut String, series: &[Series]) {
    for (k, s) in series.iter().enumerate() {
        let x = LEFT + (k % 4) as f64 * 74.0;
        let y = TOP + PLOT_H + 30.0 + (k / 4) as f64 * 14.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            y - 9.0,
            PALETTE[k % PALETTE.len()],
            x + 13.0,
            y,
            escape(&s.name)
        );
    }
}

/// One line-chart panel, positioned by the caller.
pub fn line_panel(title: &str, x_labels: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    let step = if x_labels.len() > 1 {
        PLOT_W / (x_labels.len() - 1) as f64
    } else {
        0.0
    };
    let x_of = |i: usize| LEFT + step * i as f64;
    axes(&mut out, title, x_labels, &x_of);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| format!("{:.1},{:.1}", x_of(i), y_of(v))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').expect("point");
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
        }
    }
    legend(&mut out, series);
    out
}

/// One grouped-bar panel, positioned by the caller.
pub fn bar_panel(title: &str, groups: &[String], series: &[Series]) -> String {
    let mut out = String::new();
    let group_w = PLOT_W / groups.len().max(1) as f64;
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    let x_of = |i: usize| LEFT + group_w * (i as f64 + 0.5);
    axes(&mut out, title, groups, &x_of);
    for (k, s) in series.iter().enumerate() {
        for (i, v) in s.values.iter().enumerate() {
            let Some(v) = v else { continue };
            let x = LEFT + group_w * i as f64 + group_w * 0.1 + bar_w * k as f64;
            let y = y_of(*v);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"><title>{} {:.3}</title></rect>"#,
                TOP + PLOT_H - y,
                PALETTE[k % PALETTE.len()],
                escape(&s.name),
                v
            );
        }
    }
    legend(&mut out, series);
    out
}

/// Place panels on a grid inside one standalone document.
pub fn document(title: &str, panels: &[String], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let w = PANEL_W * columns as f64;
    let h = PANEL_H * rows as f64 + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" font-size="15" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<g transform="translate({:.1},{:.1})">"#,
            PANEL_W * (i % columns) as f64,
            30.0 + PANEL_H * (i / columns) as f64
        );
        out.push_str(p);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn lookup(
    rows: &[EvalRow],
    model: &str,
    op: &str,
    th: &str,
    dataset: &str,
    noise: &str,
) -> Option<f64> {
    rows.iter()
        .find(|r| {
            r.model == model
                && r.merge_op == op
                && r.thresholding == th
                && r.dataset == dataset
                && r.noise == noise
        })
        .map(|r| r.accuracy)
}

fn noise_labels() -> Vec<String> {
    NoiseLevel::ALL.iter().map(|n| n.id().to_string()).collect()
}

/// Series of the four models for one merge operator and thresholding.
fn model_series(rows: &[EvalRow], op: &str, th: &str, points: &[(&str, &str)]) -> Vec<Series> {
    let mut out = vec![Series {
        name: "baseline".into(),
        values: points
            .iter()
            .map(|(d, n)| lookup(rows, "baseline", "max", "none", d, n))
            .collect(),
    }];
    for m in ["m1", "m2", "m3"] {
        out.push(Series {
            name: m.into(),
            values: points
                .iter()
                .map(|(d, n)| lookup(rows, m, op, th, d, n))
                .collect(),
        });
    }
    out
}

/// Accuracy against noise level, one panel per dataset kind.
pub fn accuracy_vs_noise(rows: &[EvalRow], op: &str, th: &str) -> String {
    let panels: Vec<String> = DatasetKind::ALL
        .iter()
        .map(|k| {
            let points: Vec<(&str, &str)> =
                NoiseLevel::ALL.iter().map(|n| (k.id(), n.id())).collect();
            line_panel(
                &format!("{k} ({op}, {th})"),
                &noise_labels(),
                &model_series(rows, op, th, &points),
            )
        })
        .collect();
    document("Accuracy vs noise", &panels, 3)
}

/// Models side by side per dataset, one panel per merge operator.
pub fn model_comparison(rows: &[EvalRow], th: &str) -> String {
    let panels: Vec<String> = ["max", "mul", "add"]
        .iter()
        .flat_map(|op| {
            DatasetKind::ALL.iter().map(move |k| {
                let points: Vec<(&str, &str)> =
                    NoiseLevel::ALL.iter().map(|n| (k.id(), n.id())).collect();
                bar_panel(
                    &format!("{k}, {op} ({th})"),
                    &noise_labels(),
                    &model_series(rows, op, th, &points),
                )
            })
        })
        .collect();
    document("Model comparison", &panels, 3)
}

/// Fixed against entropy thresholding for each model, per dataset kind.
pub fn thresholding_comparison(rows: &[EvalRow], op: &str) -> String {
    let panels: Vec<String> = DatasetKind::ALL
        .iter()
        .map(|k| {
            let mut series = Vec::new();
            for m in ["m1", "m2", "m3"] {
                for th in ["fixed", "entropy"] {
                    series.push(Series {
                        name: format!("{m} {th}"),
                        values: NoiseLevel::ALL
                            .iter()
                            .map(|n| lookup(rows, m, op, th, k.id(), n.id()))
                            .collect(),
                    });
                }
            }
            bar_panel(&format!("{k} ({op})"), &noise_labels(), &series)
        })
        .collect();
    document("Fixed vs entropy thresholding", &panels, 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, op: &str, th: &str, dataset: &str, noise: &str, acc: f64) -> EvalRow {
        EvalRow {
            model: model.into(),
            merge_op: op.into(),
            thresholding: th.into(),
            dataset: dataset.into(),
            noise: noise.into(),
            n: 10,
            accuracy: acc,
            n_clear: 10,
            n_unclear: 0,
            n_noise: 0,
        }
    }

    #[test]
    fn documents_are_standalone_svg() {
        let rows = vec![
            row("m3", "add", "entropy", "aligned", "n0", 1.0),
            row("baseline", "max", "none", "aligned", "n0", 0.5),
        ];
        for doc in [
            accuracy_vs_noise(&rows, "add", "entropy"),
            model_comparison(&rows, "entropy"),
            thresholding_comparison(&rows, "add"),
        ] {
            assert!(doc.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
            assert!(doc.trim_end().ends_with("</svg>"));
            assert!(!doc.contains("href"));
            assert_eq!(doc.matches("<g ").count(), doc.matches("</g>").count());
        }
    }

    #[test]
    fn bars_scale_with_accuracy() {
        let s = vec![Series {
            name: "a<b".into(),
            values: vec![Some(1.0), Some(0.5), None],
        }];
        let p = bar_panel("t", &["x".into(), "y".into(), "z".into()], &s);
        assert_eq!(p.matches("<rect x").count(), 1 + 2);
        assert!(p.contains(&format!("height=\"{:.1}\"", PLOT_H)));
        assert!(p.contains(&format!("height=\"{:.1}\"", PLOT_H / 2.0)));
        assert!(p.contains("a&lt;b"));
    }

    #[test]
    fn lines_skip_missing_points() {
        let s = vec![Series {
            name: "m".into(),
            values: vec![Some(0.0), None, Some(1.0)],
        }];
        let p = line_panel("t", &["a".into(), "b".into(), "c".into()], &s);
        assert_eq!(p.matches("<circle").count(), 2);
        assert!(p.contains(&format!("{:.1},{:.1}", LEFT, TOP + PLOT_H)));
    }
}
