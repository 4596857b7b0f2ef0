//! Grouped bar chart of each agent's share of each good.

use std::fmt::Write;

use fairshare::{Allocation, Instance};

use crate::output::fmt_num;

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];
const BAR: f64 = 18.0;
const GAP: f64 = 24.0;
const PLOT_H: f64 = 200.0;
const MARGIN: f64 = 40.0;

/// One group of bars per agent, one bar per good, heights `x_ij / q_j`.
pub fn share_chart(instance: &Instance, x: &Allocation) -> String {
    let (n, m) = (instance.n(), instance.m());
    let q = instance.quantities();
    let group = m as f64 * BAR + GAP;
    let width = 2.0 * MARGIN + n as f64 * group;
    let legend_h = 18.0 * m as f64;
    let height = 2.0 * MARGIN + PLOT_H + 20.0 + legend_h;
    let base = MARGIN + PLOT_H;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = fmt_num(width),
        h = fmt_num(height)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{base}" x2="{x1}" y2="{base}" stroke="black"/>"#,
        x0 = fmt_num(MARGIN),
        x1 = fmt_num(width - MARGIN),
        base = fmt_num(base)
    );
    for (tick, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let y = base - tick * PLOT_H;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="end">{label}</text>"#,
            x = fmt_num(MARGIN - 4.0),
            y = fmt_num(y + 4.0)
        );
    }
    for (i, agent) in instance.agents().iter().enumerate() {
        let gx = MARGIN + GAP / 2.0 + i as f64 * group;
        for j in 0..m {
            let share = (x.get(i, j) / q[j]).clamp(0.0, 1.0);
            let h = share * PLOT_H;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{bw}" height="{h}" fill="{c}"><title>{a} {g}: {v}</title></rect>"#,
                x = fmt_num(gx + j as f64 * BAR),
                y = fmt_num(base - h),
                bw = fmt_num(BAR - 2.0),
                h = fmt_num(h),
                c = PALETTE[j % PALETTE.len()],
                a = escape(&agent.name),
                g = escape(&instance.goods()[j].name),
                v = fmt_num(share)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" text-anchor="middle">{a}</text>"#,
            x = fmt_num(gx + m as f64 * BAR / 2.0),
            y = fmt_num(base + 16.0),
            a = escape(&agent.name)
        );
    }
    for (j, good) in instance.goods().iter().enumerate() {
        let y = base + 36.0 + 18.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="12" height="12" fill="{c}"/><text x="{tx}" y="{ty}">{g}</text>"#,
            x = fmt_num(MARGIN),
            y = fmt_num(y - 10.0),
            c = PALETTE[j % PALETTE.len()],
            tx = fmt_num(MARGIN + 18.0),
            ty = fmt_num(y),
            g = escape(&good.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
