//! CSV and SVG emission.
//!
//! Every CSV starts with one `# {...}` comment row holding the resolved run
//! configuration and seed as JSON. Floats are written in shortest round-trip
//! form, so re-reading a CSV recovers the exact values.

use std::fmt::Write as _;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::analysis::{RevivalReport, SweepPoint};
use crate::dynamics::Pair;
use crate::ratio::{FixedPoints, Portrait, RatioTrajectory};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_comment<W: Write>(w: &mut W, header_json: &str) -> io::Result<()> {
    debug_assert!(!header_json.contains('\n'));
    writeln!(w, "# {header_json}")
}

/// One labelled time series of oscillator amplitudes, optionally with the
/// reservoir amplitudes `b_k`, `c_k` at each sample.
pub struct Series<'a> {
    pub label: Option<&'a str>,
    pub times: &'a [f64],
    pub pairs: &'a [Pair],
    pub reservoirs: Option<(usize, Vec<&'a [Complex64]>)>,
}

/// Trajectory CSV: `t,re_a1,im_a1,re_a2,im_a2,abs_a1,abs_a2[,re_b1,im_b1,...][,model]`.
///
/// Reservoir columns are written when the first series carries them; the
/// `model` column when any series is labelled.
pub fn write_trajectory<W: Write>(w: &mut W, header_json: &str, series: &[Series<'_>]) -> io::Result<()> {
    write_comment(w, header_json)?;
    let labelled = series.iter().any(|s| s.label.is_some());
    let reservoir_layout = series.first().and_then(|s| s.reservoirs.as_ref().map(|(n1, v)| (*n1, v.first().map_or(0, |r| r.len()))));
    let mut head = String::from("t,re_a1,im_a1,re_a2,im_a2,abs_a1,abs_a2");
    if let Some((n1, total)) = reservoir_layout {
        for k in 1..=n1 {
            write!(head, ",re_b{k},im_b{k}").unwrap();
        }
        for k in 1..=total.saturating_sub(n1) {
            write!(head, ",re_c{k},im_c{k}").unwrap();
        }
    }
    if labelled {
        head.push_str(",model");
    }
    writeln!(w, "{head}")?;
    for s in series {
        for (i, (&t, p)) in s.times.iter().zip(s.pairs).enumerate() {
            let mut row = format!(
                "{},{},{},{},{},{},{}",
                fmt_f64(t),
                fmt_f64(p[0].re),
                fmt_f64(p[0].im),
                fmt_f64(p[1].re),
                fmt_f64(p[1].im),
                fmt_f64(p[0].norm()),
                fmt_f64(p[1].norm())
            );
            if let Some((_, total)) = reservoir_layout {
                match &s.reservoirs {
                    Some((_, res)) => {
                        for z in res[i] {
                            write!(row, ",{},{}", fmt_f64(z.re), fmt_f64(z.im)).unwrap();
                        }
                    }
                    None => row.push_str(&",".repeat(2 * total)),
                }
            }
            if labelled {
                write!(row, ",{}", s.label.unwrap_or("")).unwrap();
            }
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}

/// Sweep CSV. Failed points keep their coupling and carry `NaN` values with
/// zero counts.
pub fn write_sweep<W: Write>(w: &mut W, header_json: &str, points: &[SweepPoint], t_obs: f64, seed: u64) -> io::Result<()> {
    write_comment(w, header_json)?;
    writeln!(w, "omega,abs_D12,re_D12,im_D12,re_meanI,im_meanI,n_valid,n_discarded,T,seed")?;
    for p in points {
        match &p.outcome {
            Ok(r) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.coupling),
                fmt_f64(r.abs_var),
                fmt_f64(r.var_d.re),
                fmt_f64(r.var_d.im),
                fmt_f64(r.mean_i.re),
                fmt_f64(r.mean_i.im),
                r.n_valid,
                r.n_discarded,
                fmt_f64(r.observation_time),
                r.seed
            )?,
            Err(_) => writeln!(w, "{},NaN,NaN,NaN,NaN,NaN,0,0,{},{}", fmt_f64(p.coupling), fmt_f64(t_obs), seed)?,
        }
    }
    Ok(())
}

/// Portrait CSV: the vector field on the grid.
pub fn write_portrait<W: Write>(w: &mut W, header_json: &str, portrait: &Portrait) -> io::Result<()> {
    write_comment(w, header_json)?;
    writeln!(w, "re,im,dre_dt,dim_dt")?;
    for n in &portrait.nodes {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(n.at.re),
            fmt_f64(n.at.im),
            fmt_f64(n.velocity.0),
            fmt_f64(n.velocity.1)
        )?;
    }
    Ok(())
}

/// Ratio trajectory: `t,re_A,im_A,escaped`; `escaped` is set on the last
/// row of a trajectory truncated at the escape radius.
pub fn write_ratio_trajectory<W: Write>(w: &mut W, header_json: &str, tr: &RatioTrajectory) -> io::Result<()> {
    write_comment(w, header_json)?;
    writeln!(w, "t,re_A,im_A,escaped")?;
    let last = tr.points.len().saturating_sub(1);
    for (i, (t, p)) in tr.times.iter().zip(&tr.points).enumerate() {
        let esc = tr.escaped && i == last;
        writeln!(w, "{},{},{},{}", fmt_f64(*t), fmt_f64(p.re), fmt_f64(p.im), esc)?;
    }
    Ok(())
}

pub fn write_revivals<W: Write>(w: &mut W, header_json: &str, report: &RevivalReport) -> io::Result<()> {
    write_comment(w, header_json)?;
    writeln!(w, "peak_time,oscillator")?;
    let mut rows: Vec<(f64, usize)> = report
        .peaks
        .iter()
        .enumerate()
        .flat_map(|(j, ts)| ts.iter().map(move |&t| (t, j + 1)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, j) in rows {
        writeln!(w, "{},{j}", fmt_f64(t))?;
    }
    Ok(())
}

pub fn write_fixed_points<W: Write>(w: &mut W, header_json: &str, fps: &FixedPoints) -> io::Result<()> {
    write_comment(w, header_json)?;
    writeln!(w, "re,im,stability,re_mu1,im_mu1,re_mu2,im_mu2")?;
    for fp in fps.points() {
        let [m1, m2] = fp.jacobian_eigenvalues;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(fp.point.re),
            fmt_f64(fp.point.im),
            serde_json::to_value(fp.stability).unwrap().as_str().unwrap_or(""),
            fmt_f64(m1.0),
            fmt_f64(m1.1),
            fmt_f64(m2.0),
            fmt_f64(m2.1)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// SVG

const W: f64 = 720.0;
const H: f64 = 440.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 30.0;
const MB: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(a, b) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 <= 0.0 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x.0) / (self.x.1 - self.x.0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y.0) / (self.y.1 - self.y.0) * (H - MT - MB)
    }
}

fn svg_open(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title)).unwrap();
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (ML, W - MR, MT, H - MB);
    writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0).unwrap();
    for i in 0..=4 {
        let fx = f.x.0 + (f.x.1 - f.x.0) * i as f64 / 4.0;
        let fy = f.y.0 + (f.y.1 - f.y.0) * i as f64 / 4.0;
        let (px, py) = (f.px(fx), f.py(fy));
        writeln!(out, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y1 + 5.0).unwrap();
        writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y1 + 18.0, tick(fx)).unwrap();
        writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(fy)).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 12.0, escape(xlabel)).unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(ylabel),
        y = (y0 + y1) / 2.0
    )
    .unwrap();
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    // NaN points break the line
    for chunk in pts.split(|p| !(p.0.is_finite() && p.1.is_finite())) {
        if chunk.is_empty() {
            continue;
        }
        let coords: Vec<String> = chunk.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.3"{dash}/>"#, coords.join(" ")).unwrap();
    }
}

/// Line plot with optional vertical reference lines.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, lines: &[Line], vlines: &[(String, f64)]) -> String {
    let f = Frame::fit(lines.iter().flat_map(|l| l.points.iter()));
    let mut out = String::new();
    svg_open(&mut out, title);
    axes(&mut out, &f, xlabel, ylabel);
    for (i, l) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut out, &f, &l.points, color, l.dashed);
        let ly = MT + 16.0 + 16.0 * i as f64;
        writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - MR - 140.0, W - MR - 115.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, W - MR - 110.0, ly + 4.0, escape(&l.label)).unwrap();
    }
    for (label, x) in vlines {
        if x.is_finite() && *x >= f.x.0 && *x <= f.x.1 {
            let px = f.px(*x);
            writeln!(out, r#"<line x1="{px:.2}" y1="{MT}" x2="{px:.2}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#, H - MB).unwrap();
            writeln!(out, r#"<text x="{:.2}" y="{}" fill="gray">{}</text>"#, px + 4.0, MT + 12.0, escape(label)).unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Vector field arrows (normalized length), seed trajectories and fixed
/// points of the ratio dynamics.
pub fn portrait_svg(title: &str, portrait: &Portrait, re_range: (f64, f64), im_range: (f64, f64)) -> String {
    let f = Frame {
        x: re_range,
        y: im_range,
    };
    let mut out = String::new();
    svg_open(&mut out, title);
    axes(&mut out, &f, "Re A", "Im A");
    let cell = (W - ML - MR) / 30.0;
    for n in &portrait.nodes {
        let (vx, vy) = n.velocity;
        // screen y grows downwards
        let (sx, sy) = (vx * (W - ML - MR) / (f.x.1 - f.x.0), -vy * (H - MT - MB) / (f.y.1 - f.y.0));
        let len = sx.hypot(sy);
        if !(len > 0.0) || !len.is_finite() {
            continue;
        }
        let (ux, uy) = (sx / len * cell, sy / len * cell);
        let (x0, y0) = (f.px(n.at.re), f.py(n.at.im));
        let (x1, y1) = (x0 + ux, y0 + uy);
        writeln!(out, r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#888"/>"##).unwrap();
        // arrow head
        let (hx, hy) = (-ux * 0.35, -uy * 0.35);
        let (a, b) = (hx - hy * 0.5, hy + hx * 0.5);
        let (c, d) = (hx + hy * 0.5, hy - hx * 0.5);
        writeln!(
            out,
            r##"<polygon points="{x1:.2},{y1:.2} {:.2},{:.2} {:.2},{:.2}" fill="#888"/>"##,
            x1 + a,
            y1 + b,
            x1 + c,
            y1 + d
        )
        .unwrap();
    }
    let inside = |x: f64, y: f64| x >= f.x.0 && x <= f.x.1 && y >= f.y.0 && y <= f.y.1;
    for (i, tr) in portrait.trajectories.iter().enumerate() {
        let pts: Vec<(f64, f64)> = tr
            .points
            .iter()
            .map(|p| if inside(p.re, p.im) { (p.re, p.im) } else { (f64::NAN, f64::NAN) })
            .collect();
        polyline(&mut out, &f, &pts, PALETTE[i % PALETTE.len()], false);
    }
    for fp in portrait.fixed_points.points() {
        if inside(fp.point.re, fp.point.im) {
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"><title>{:?}</title></circle>"#,
                f.px(fp.point.re),
                f.py(fp.point.im),
                fp.stability
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::SweepResult;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::f64::consts::PI, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trajectory_csv_layout() {
        let times = [0.0, 0.5];
        let pairs = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]; 2];
        let res: Vec<Complex64> = vec![Complex64::new(0.25, 0.0); 3];
        let mut buf = Vec::new();
        write_trajectory(
            &mut buf,
            "{}",
            &[Series {
                label: None,
                times: &times,
                pairs: &pairs,
                reservoirs: Some((2, vec![&res, &res])),
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# {}");
        assert_eq!(lines[1], "t,re_a1,im_a1,re_a2,im_a2,abs_a1,abs_a2,re_b1,im_b1,re_b2,im_b2,re_c1,im_c1");
        assert_eq!(lines[2], "0.0,1.0,0.0,0.0,1.0,1.0,1.0,0.25,0.0,0.25,0.0,0.25,0.0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn overlay_has_model_column() {
        let times = [0.0];
        let pairs = [[Complex64::new(1.0, 0.0); 2]];
        let mut buf = Vec::new();
        let s = |label| Series {
            label: Some(label),
            times: &times,
            pairs: &pairs,
            reservoirs: None,
        };
        write_trajectory(&mut buf, "{}", &[s("hermitian"), s("reduced")]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",model"));
        assert!(text.lines().nth(3).unwrap().ends_with(",reduced"));
    }

    #[test]
    fn sweep_csv_keeps_failed_points() {
        let ok = SweepResult {
            coupling: 0.5,
            mean_i: Complex64::new(0.0, -0.3),
            var_d: Complex64::new(0.01, 0.0),
            abs_var: 0.01,
            n_valid: 10,
            n_discarded: 0,
            observation_time: 100.0,
            seed: 4,
        };
        let points = vec![
            SweepPoint {
                coupling: 0.5,
                outcome: Ok(ok),
            },
            SweepPoint {
                coupling: 0.6,
                outcome: Err("too few".into()),
            },
        ];
        let mut buf = Vec::new();
        write_sweep(&mut buf, "{}", &points, 100.0, 4).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[2], "0.5,0.01,0.01,0.0,0.0,-0.3,10,0,100.0,4");
        assert_eq!(lines[3], "0.6,NaN,NaN,NaN,NaN,NaN,0,0,100.0,4");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = line_plot(
            "t",
            "x",
            "y",
            &[Line {
                label: "a<b".into(),
                points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)],
                dashed: false,
            }],
            &[("ref".into(), 1.0)],
        );
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
