//! Violin plots of ratio distributions, one panel per kernel.

use crate::svg::{ticks, Svg, PALETTE};

use super::{summarize_ratios, MappingStrategy, SweepError, SweepReport};

const LEFT: f64 = 70.0;
const PANEL_W: f64 = 260.0;
const PLOT_H: f64 = 260.0;
const TOP: f64 = 40.0;
const TABLE_H: f64 = 60.0;
const VIOLIN_HALF: f64 = 45.0;
const DENSITY_POINTS: usize = 60;

fn gaussian_kde(values: &[f64], at: f64, bandwidth: f64) -> f64 {
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    values
        .iter()
        .map(|v| {
            let z = (at - v) / bandwidth;
            (-0.5 * z * z).exp()
        })
        .sum::<f64>()
        * norm
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Per-kernel violin plots of every non-optimal strategy's ratios, with a
/// reference line at 1 and the summary statistics printed under each panel.
pub fn render_distribution(report: &SweepReport) -> Result<String, SweepError> {
    if report.ratios.is_empty() {
        return Err(SweepError::NothingToPlot);
    }
    let mut groups: Vec<(String, super::ProblemSize)> = Vec::new();
    for r in &report.ratios {
        if !groups.iter().any(|(k, p)| *k == r.kernel && *p == r.problem) {
            groups.push((r.kernel.clone(), r.problem));
        }
    }
    let mut strategies: Vec<MappingStrategy> = report.ratios.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    let stats = summarize_ratios(&report.ratios);

    let y_max = report.ratios.iter().map(|r| r.ratio).fold(1.2f64, f64::max) * 1.05;
    let width = LEFT + groups.len() as f64 * PANEL_W + 20.0;
    let height = TOP + PLOT_H + TABLE_H + 20.0;
    let mut svg = Svg::new(width, height);
    svg.text(LEFT, 20.0, 13.0, "start", "cycles(strategy) / cycles(optimal)");

    let y_of = |ratio: f64| TOP + PLOT_H - ratio / y_max * PLOT_H;
    svg.line(LEFT, TOP, LEFT, TOP + PLOT_H, "black", 1.0, r#" class="axis""#);
    for t in ticks(y_max) {
        svg.line(LEFT - 4.0, y_of(t), LEFT, y_of(t), "black", 1.0, "");
        svg.text(LEFT - 6.0, y_of(t) + 3.0, 9.0, "end", &format!("{t}"));
    }

    for (gi, (kernel, problem)) in groups.iter().enumerate() {
        let x0 = LEFT + gi as f64 * PANEL_W;
        svg.raw(&format!(r#"<g class="kernel-panel" data-kernel="{kernel}">"#));
        svg.line(
            x0,
            TOP + PLOT_H,
            x0 + PANEL_W,
            TOP + PLOT_H,
            "black",
            1.0,
            r#" class="axis""#,
        );
        svg.text(
            x0 + PANEL_W / 2.0,
            TOP - 6.0,
            11.0,
            "middle",
            &format!("{kernel} ({problem})"),
        );
        let slot = PANEL_W / strategies.len() as f64;
        for (si, strategy) in strategies.iter().enumerate() {
            let values: Vec<f64> = report
                .ratios
                .iter()
                .filter(|r| r.kernel == *kernel && r.problem == *problem && r.strategy == *strategy)
                .map(|r| r.ratio)
                .collect();
            if values.is_empty() {
                continue;
            }
            let cx = x0 + slot * (si as f64 + 0.5);
            let color = PALETTE[(si + 1) % PALETTE.len()];
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sd = std_dev(&values);
            if values.len() < 2 || sd == 0.0 || hi - lo <= f64::EPSILON {
                svg.line(
                    cx - VIOLIN_HALF,
                    y_of(lo),
                    cx + VIOLIN_HALF,
                    y_of(lo),
                    color,
                    2.0,
                    &format!(r#" class="degenerate" data-strategy="{strategy}""#),
                );
            } else {
                let bandwidth = 1.06 * sd * (values.len() as f64).powf(-0.2);
                let samples: Vec<(f64, f64)> = (0..DENSITY_POINTS)
                    .map(|i| {
                        let y = lo + (hi - lo) * i as f64 / (DENSITY_POINTS - 1) as f64;
                        (y, gaussian_kde(&values, y, bandwidth))
                    })
                    .collect();
                let peak = samples.iter().map(|(_, d)| *d).fold(0.0, f64::max);
                let mut outline: Vec<(f64, f64)> = samples
                    .iter()
                    .map(|(y, d)| (cx + d / peak * VIOLIN_HALF, y_of(*y)))
                    .collect();
                outline.extend(
                    samples
                        .iter()
                        .rev()
                        .map(|(y, d)| (cx - d / peak * VIOLIN_HALF, y_of(*y))),
                );
                svg.polygon(
                    &outline,
                    color,
                    color,
                    &format!(r#" fill-opacity="0.45" class="violin" data-strategy="{strategy}""#),
                );
            }
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            svg.circle(cx, y_of(median), 2.5, "black");
            svg.text(cx, TOP + PLOT_H + 14.0, 10.0, "middle", &strategy.to_string());
            if let Some(s) = stats
                .iter()
                .find(|s| s.kernel == *kernel && s.problem == *problem && s.strategy == *strategy)
            {
                svg.text(cx, TOP + PLOT_H + 28.0, 9.0, "middle", &format!("avg {:.2}", s.mean));
                svg.text(cx, TOP + PLOT_H + 40.0, 9.0, "middle", &format!("worst {:.2}", s.worst));
                svg.text(
                    cx,
                    TOP + PLOT_H + 52.0,
                    9.0,
                    "middle",
                    &format!(
                        "<1: {}/{} ({:.0}%)",
                        (s.fraction_below_one * s.count as f64).round(),
                        s.count,
                        100.0 * s.fraction_below_one
                    ),
                );
            }
        }
        svg.line(
            x0,
            y_of(1.0),
            x0 + PANEL_W,
            y_of(1.0),
            "red",
            1.5,
            r#" class="reference""#,
        );
        svg.raw("</g>");
    }
    Ok(svg.finish())
}
