//! SVG timelines of instruction issue.
//!
//! Each panel stacks, top to bottom: one wavefront row per section, the PC
//! over time, one issue row per warp (marks colored by section) and the
//! active-lane count over time. Kernel calls are shaded in the background.
//! Panels rendered together share one time axis.

use std::collections::BTreeSet;

use crate::kernels::{Section, SectionMap};
use crate::svg::{escape, ticks, Svg, PALETTE};

use super::TraceRecord;

const LEFT: f64 = 150.0;
const PLOT_W: f64 = 900.0;
const RIGHT: f64 = 30.0;
const TITLE_H: f64 = 24.0;
const SECTION_ROW: f64 = 9.0;
const PC_H: f64 = 70.0;
const WARP_ROW: f64 = 14.0;
const LANES_H: f64 = 40.0;
const AXIS_H: f64 = 30.0;
const GAP: f64 = 8.0;

/// Section rows and (core, warp) rows of one panel.
type Layout = (Vec<Section>, Vec<(u32, u32)>);

pub struct TimelinePanel<'a> {
    pub title: String,
    pub records: &'a [TraceRecord],
    pub section_map: &'a SectionMap,
}

/// Single-panel timeline.
pub fn render_timeline(records: &[TraceRecord], section_map: &SectionMap) -> String {
    render_timelines(&[TimelinePanel {
        title: String::new(),
        records,
        section_map,
    }])
}

fn section_order(panel: &TimelinePanel) -> Vec<Section> {
    let mut order = panel.section_map.sections();
    for r in panel.records {
        if !order.contains(&r.section) {
            order.push(r.section.clone());
        }
    }
    order
}

fn panel_height(sections: usize, warps: usize) -> f64 {
    TITLE_H + sections as f64 * SECTION_ROW + GAP + PC_H + GAP + warps.max(1) as f64 * WARP_ROW + GAP + LANES_H + AXIS_H
}

/// Stacked timelines on a shared time axis.
pub fn render_timelines(panels: &[TimelinePanel]) -> String {
    let span = panels
        .iter()
        .flat_map(|p| p.records.iter().map(|r| r.cycle + 1))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let layouts: Vec<Layout> = panels
        .iter()
        .map(|p| {
            let warps: BTreeSet<(u32, u32)> = p.records.iter().map(|r| (r.core_id, r.warp_id)).collect();
            (section_order(p), warps.into_iter().collect())
        })
        .collect();
    let height: f64 = layouts
        .iter()
        .map(|(s, w)| panel_height(s.len(), w.len()) + GAP * 2.0)
        .sum::<f64>()
        .max(60.0);
    let mut svg = Svg::new(LEFT + PLOT_W + RIGHT, height);
    let x_of = |cycle: f64| LEFT + cycle / span * PLOT_W;
    let mark_w = (PLOT_W / span).max(0.8);
    let max_lanes = panels
        .iter()
        .flat_map(|p| p.records.iter().map(|r| r.thread_mask.count_ones()))
        .max()
        .unwrap_or(1)
        .max(1) as f64;

    let mut top = GAP;
    for (panel, (sections, warps)) in panels.iter().zip(&layouts) {
        let h = panel_height(sections.len(), warps.len());
        let color = |s: &Section| PALETTE[sections.iter().position(|x| x == s).unwrap_or(0) % PALETTE.len()];
        svg.raw(&format!(r#"<g class="panel" data-title="{}">"#, escape(&panel.title)));
        svg.text(LEFT, top + 16.0, 13.0, "start", &panel.title);

        // call spans
        let mut calls: Vec<(u32, u64, u64)> = Vec::new();
        for r in panel.records {
            match calls.iter_mut().find(|(c, _, _)| *c == r.call_index) {
                Some((_, lo, hi)) => {
                    *lo = (*lo).min(r.cycle);
                    *hi = (*hi).max(r.cycle + 1);
                }
                None => calls.push((r.call_index, r.cycle, r.cycle + 1)),
            }
        }
        for (i, (call, lo, hi)) in calls.iter().enumerate() {
            let fill = if i % 2 == 0 { "#eef2f8" } else { "#f7f0e6" };
            svg.rect(
                x_of(*lo as f64),
                top + TITLE_H,
                (x_of(*hi as f64) - x_of(*lo as f64)).max(1.0),
                h - TITLE_H - AXIS_H,
                fill,
                &format!(r#" class="call-span" data-call="{call}""#),
            );
        }

        // section wavefronts
        let mut y = top + TITLE_H;
        for s in sections {
            svg.text(LEFT - 6.0, y + SECTION_ROW - 1.0, 8.0, "end", &s.to_string());
            for r in panel.records.iter().filter(|r| &r.section == s) {
                svg.rect(x_of(r.cycle as f64), y + 1.0, mark_w, SECTION_ROW - 2.0, color(s), "");
            }
            y += SECTION_ROW;
        }
        y += GAP;

        // pc over time
        let max_pc = panel
            .section_map
            .len_pcs()
            .max(panel.records.iter().map(|r| r.pc + 1).max().unwrap_or(1)) as f64;
        svg.text(LEFT - 6.0, y + PC_H / 2.0, 10.0, "end", "PC");
        svg.line(LEFT, y + PC_H, LEFT + PLOT_W, y + PC_H, "#999", 0.5, "");
        for r in panel.records {
            let py = y + PC_H - (f64::from(r.pc) + 0.5) / max_pc * PC_H;
            let warp_idx = warps.iter().position(|w| *w == (r.core_id, r.warp_id)).unwrap_or(0);
            svg.circle(x_of(r.cycle as f64 + 0.5), py, 1.2, PALETTE[warp_idx % PALETTE.len()]);
        }
        y += PC_H + GAP;

        // warp issue rows
        for (core, warp) in warps {
            svg.raw(&format!(
                r#"<g class="warp-row" data-core="{core}" data-warp="{warp}">"#
            ));
            svg.text(LEFT - 6.0, y + WARP_ROW - 3.0, 9.0, "end", &format!("c{core} w{warp}"));
            for r in panel
                .records
                .iter()
                .filter(|r| (r.core_id, r.warp_id) == (*core, *warp))
            {
                svg.rect(
                    x_of(r.cycle as f64),
                    y + 1.0,
                    mark_w,
                    WARP_ROW - 2.0,
                    color(&r.section),
                    "",
                );
            }
            svg.raw("</g>");
            y += WARP_ROW;
        }
        if warps.is_empty() {
            y += WARP_ROW;
        }
        y += GAP;

        // active lanes
        svg.text(LEFT - 6.0, y + LANES_H / 2.0, 10.0, "end", "lanes");
        for r in panel.records {
            let ly = y + LANES_H - f64::from(r.thread_mask.count_ones()) / max_lanes * (LANES_H - 4.0);
            svg.rect(x_of(r.cycle as f64), ly, mark_w, y + LANES_H - ly, "#555", "");
        }
        y += LANES_H;

        // time axis
        svg.line(LEFT, y, LEFT + PLOT_W, y, "black", 1.0, r#" class="axis""#);
        svg.line(LEFT, top + TITLE_H, LEFT, y, "black", 1.0, r#" class="axis""#);
        for t in ticks(span) {
            svg.line(x_of(t), y, x_of(t), y + 4.0, "black", 1.0, "");
            svg.text(x_of(t), y + 15.0, 9.0, "middle", &format!("{t}"));
        }
        svg.text(LEFT + PLOT_W, y + 26.0, 9.0, "end", "cycle");

        // legend
        let mut lx = LEFT + PLOT_W;
        for s in sections.iter().rev() {
            let label = s.to_string();
            lx -= 12.0 + label.len() as f64 * 6.0;
            svg.rect(lx, top + 7.0, 8.0, 8.0, color(s), "");
            svg.text(lx + 10.0, top + 15.0, 9.0, "start", &label);
        }
        svg.raw("</g>");
        top += h + GAP * 2.0;
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::InstrClass;

    fn rec(cycle: u64, warp: u32, call: u32) -> TraceRecord {
        TraceRecord {
            cycle,
            core_id: 0,
            warp_id: warp,
            call_index: call,
            pc: 0,
            thread_mask: 1,
            section: Section::Body,
            instr_class: InstrClass::Alu,
        }
    }

    #[test]
    fn empty_trace_has_axes_only() {
        let doc = render_timeline(&[], &SectionMap::default());
        assert!(doc.starts_with("<?xml"));
        assert!(doc.contains(r#"class="axis""#));
        assert_eq!(doc.matches(r#"class="warp-row""#).count(), 0);
        assert_eq!(doc.matches(r#"class="call-span""#).count(), 0);
    }

    #[test]
    fn one_row_per_warp() {
        let doc = render_timeline(&[rec(0, 0, 0), rec(3, 0, 0)], &SectionMap::default());
        assert_eq!(doc.matches(r#"class="warp-row""#).count(), 1);
        let doc = render_timeline(&[rec(0, 0, 0), rec(1, 1, 0)], &SectionMap::default());
        assert_eq!(doc.matches(r#"class="warp-row""#).count(), 2);
    }

    #[test]
    fn calls_shaded_separately() {
        let doc = render_timeline(&[rec(0, 0, 0), rec(100, 0, 1)], &SectionMap::default());
        assert_eq!(doc.matches(r#"class="call-span""#).count(), 2);
    }
}
