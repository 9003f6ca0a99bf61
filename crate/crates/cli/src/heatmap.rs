//! SVG rendering of 2-D shields.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use gridshield::shield::{mask_actions, Strategy};
use gridshield::{Aabb, GridSpec, TransformKind};

const PANEL: f64 = 400.0;
const MARGIN: f64 = 60.0;
const LEGEND: f64 = 180.0;
const NO_PREIMAGE: &str = "#bdbdbd";

const PALETTE: [&str; 12] = [
    "#d73027", "#4575b4", "#fdae61", "#a6d96a", "#1a9850", "#762a83", "#fee090", "#8c510a", "#35978f", "#c51b7d",
    "#bf812d", "#01665e",
];

pub fn mask_color(mask: u8) -> &'static str {
    PALETTE[mask as usize % PALETTE.len()]
}

pub fn mask_label(mask: u8, actions: &[String]) -> String {
    if mask == 0 {
        return "no action".into();
    }
    let names: Vec<&str> = mask_actions(mask).filter_map(|a| actions.get(a).map(String::as_str)).collect();
    format!("{{{}}}", names.join(", "))
}

fn axis_names(kind: &TransformKind) -> ([&'static str; 2], [&'static str; 2]) {
    match kind {
        TransformKind::Identity => (["s0", "s1"], ["s0", "s1"]),
        TransformKind::Polar { .. } => (["theta", "r"], ["x", "y"]),
        TransformKind::Energy { .. } => (["E", "v"], ["v", "p"]),
        TransformKind::PolyOffset { .. } => (["theta", "omega - p(theta)"], ["theta", "omega"]),
    }
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &str) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}"{extra}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{}</text>"#,
            escape(s)
        );
    }

    fn frame(&mut self, x0: f64, title: &str, b: &Aabb, names: [&str; 2]) {
        let _ = writeln!(
            self.out,
            r#"<rect x="{x0:.1}" y="{MARGIN:.1}" width="{PANEL:.1}" height="{PANEL:.1}" fill="none" stroke="black"/>"#
        );
        self.text(x0 + PANEL / 2.0, MARGIN - 20.0, "middle", title);
        let bottom = MARGIN + PANEL;
        self.text(x0, bottom + 16.0, "start", &fmt_tick(b.lo[0]));
        self.text(x0 + PANEL, bottom + 16.0, "end", &fmt_tick(b.hi[0]));
        self.text(x0 + PANEL / 2.0, bottom + 36.0, "middle", names[0]);
        self.text(x0 - 6.0, bottom, "end", &fmt_tick(b.lo[1]));
        self.text(x0 - 6.0, MARGIN + 12.0, "end", &fmt_tick(b.hi[1]));
        let _ = writeln!(
            self.out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            x0 - 40.0,
            MARGIN + PANEL / 2.0,
            x0 - 40.0,
            MARGIN + PANEL / 2.0,
            escape(names[1])
        );
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Masks of a `res[0] x res[1]` pixel grid over `S`, `None` where the
/// shield has no answer.
fn back_projection(st: &Strategy, res: [usize; 2]) -> (GridSpec, Vec<Option<u8>>) {
    let d = st.transform().domain();
    let g = GridSpec::uniform(&[(d.lo[0], d.hi[0]), (d.lo[1], d.hi[1])], &res).expect("valid pixel grid");
    let masks = (0..g.cell_count()).map(|i| st.allowed_in_s(&g.linear_cell_box(i).center()).ok()).collect();
    (g, masks)
}

/// Draw `masks` over `grid` into the panel at `x0`, merging runs along the
/// first axis.
fn draw_cells(c: &mut Canvas, x0: f64, grid: &GridSpec, masks: &[Option<u8>]) {
    let n = grid.counts();
    let (w, h) = (PANEL / n[0] as f64, PANEL / n[1] as f64);
    for j in 0..n[1] {
        let y = MARGIN + (n[1] - 1 - j) as f64 * h;
        let mut i = 0;
        while i < n[0] {
            let m = masks[i * n[1] + j];
            let mut k = i + 1;
            while k < n[0] && masks[k * n[1] + j] == m {
                k += 1;
            }
            let (fill, extra) = match m {
                Some(m) => (mask_color(m), format!(r#" class="cell" data-mask="{m}""#)),
                None => (NO_PREIMAGE, r#" class="cell" data-mask="none""#.to_string()),
            };
            c.rect(x0 + i as f64 * w, y, (k - i) as f64 * w, h, fill, &extra);
            i = k;
        }
    }
}

/// The shield as an SVG document; with `project`, a second panel shows the
/// shield pulled back to a pixel grid over `S`.
pub fn render(st: &Strategy, project: Option<[usize; 2]>) -> String {
    let (t_names, s_names) = axis_names(st.transform().kind());
    let panels = if project.is_some() { 2.0 } else { 1.0 };
    let width = panels * (PANEL + 2.0 * MARGIN) + LEGEND;
    let height = PANEL + 2.0 * MARGIN;
    let mut c = Canvas { out: String::new() };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    c.rect(0.0, 0.0, width, height, "white", "");

    let t_masks: Vec<Option<u8>> = st.masks().iter().map(|&m| Some(m)).collect();
    let mut used: BTreeSet<Option<u8>> = t_masks.iter().copied().collect();
    draw_cells(&mut c, MARGIN, st.grid(), &t_masks);
    c.frame(MARGIN, &format!("shield in T ({})", st.transform().kind().name()), &st.grid().bounds(), t_names);

    if let Some(res) = project {
        let (g, masks) = back_projection(st, res);
        used.extend(masks.iter().copied());
        let x0 = 3.0 * MARGIN + PANEL;
        draw_cells(&mut c, x0, &g, &masks);
        c.frame(x0, "shield in S", &g.bounds(), s_names);
    }

    let lx = panels * (PANEL + 2.0 * MARGIN);
    c.text(lx, MARGIN - 20.0, "start", "allowed actions");
    for (k, m) in used.iter().enumerate() {
        let y = MARGIN + 22.0 * k as f64;
        let (fill, label) = match m {
            Some(m) => (mask_color(*m), mask_label(*m, st.actions())),
            None => (NO_PREIMAGE, "outside the shield".to_string()),
        };
        let _ = writeln!(
            c.out,
            r#"<rect x="{lx:.1}" y="{y:.1}" width="14" height="14" fill="{fill}" stroke="black" class="legend"/>"#
        );
        c.text(lx + 20.0, y + 12.0, "start", &label);
    }
    c.out.push_str("</svg>\n");
    c.out
}
