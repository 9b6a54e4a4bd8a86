//! Self-contained SVG 1.1 plots with a fixed viewBox and no external resources.

use std::fmt::Write;

use rsgd::stats::chi2_pdf;
use rsgd::{EffSummary, RateSummary};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 610.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 420.0;

/// Maps data coordinates onto the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }

    fn polyline(&self, pts: impl IntoIterator<Item = (f64, f64)>, style: &str) -> String {
        let coords: Vec<String> = pts
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", coords.join(" "))
    }
}

/// Ticks at multiples of 1, 2 or 5 times a power of ten.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|k| k * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>", WIDTH / 2.0);
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    s
}

fn axes(s: &mut String, f: &Frame, xt: &[(f64, String)], yt: &[(f64, String)], xlabel: &str, ylabel: &str) {
    for (v, text) in xt {
        let x = f.px(*v);
        let _ =
            writeln!(s, "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>", BOTTOM + 5.0);
        let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{text}</text>", BOTTOM + 20.0);
    }
    for (v, text) in yt {
        let y = f.py(*v);
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>", LEFT - 5.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{text}</text>", LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{xlabel}</text>",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0})\">{ylabel}</text>",
        (TOP + BOTTOM) / 2.0
    );
}

fn legend(s: &mut String, entries: &[(&str, &str)]) {
    for (i, (style, text)) in entries.iter().enumerate() {
        let y = TOP + 20.0 + 18.0 * i as f64;
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" {style}/>", RIGHT - 190.0, RIGHT - 160.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{text}</text>", RIGHT - 152.0, y + 4.0);
    }
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (lo.ceil() as i64..=hi.floor() as i64).map(|k| (k as f64, format!("1e{k}"))).collect()
}

/// Log-log plot of the mean squared distance with the fitted line.
pub fn rate_plot(r: &RateSummary) -> String {
    let pts: Vec<(f64, f64)> =
        r.checkpoints.iter().filter(|p| p.mean_d2 > 0.0).map(|p| ((p.n as f64).log10(), p.mean_d2.log10())).collect();
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (ymin, ymax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let pad = |lo: f64, hi: f64| {
        let w = (hi - lo).max(0.5);
        (lo - 0.05 * w, hi + 0.05 * w)
    };
    let frame = Frame { x: pad(xmin, xmax), y: pad(ymin, ymax) };

    let mut s = open("Mean squared distance to the truth");
    axes(
        &mut s,
        &frame,
        &decade_ticks(frame.x.0, frame.x.1),
        &decade_ticks(frame.y.0, frame.y.1),
        "n",
        "mean d²(θₙ, θ*)",
    );
    s += &frame.polyline(pts.iter().copied(), "stroke=\"#1f77b4\" stroke-width=\"1.5\"");
    // Fitted line, in natural logs, drawn over the fit range.
    let (lo, hi) = ((r.fit_range.0 as f64).log10(), (r.fit_range.1 as f64).log10());
    let fit = |x: f64| (r.fitted_slope * x * std::f64::consts::LN_10 + r.fitted_intercept) / std::f64::consts::LN_10;
    s += &frame
        .polyline([(lo, fit(lo)), (hi, fit(hi))], "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"");
    legend(
        &mut s,
        &[
            ("stroke=\"#1f77b4\" stroke-width=\"1.5\"", "Monte-Carlo mean"),
            (
                "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"",
                &format!("fit, slope {:.3}", r.fitted_slope),
            ),
        ],
    );
    s += "</svg>\n";
    s
}

/// KDE of n·d² against the χ² density with the same degrees of freedom.
pub fn efficiency_plot(e: &EffSummary) -> String {
    let x_hi = e.kde.grid.last().copied().unwrap_or(1.0).max(1.0);
    let x_lo = 0.0;
    let ref_grid: Vec<f64> = (0..=400).map(|i| x_lo + (x_hi - x_lo) * i as f64 / 400.0).collect();
    let ref_pdf: Vec<f64> = ref_grid.iter().map(|&x| chi2_pdf(x, e.dof)).collect();
    let y_hi =
        e.kde.density.iter().chain(ref_pdf.iter()).copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max) * 1.1;
    let frame = Frame { x: (x_lo, x_hi), y: (0.0, y_hi.max(1e-6)) };

    let mut s = open(&format!("Distribution of n·d² (n = {}, {} runs)", e.n, e.runs));
    let xt: Vec<(f64, String)> = linear_ticks(x_lo, x_hi).into_iter().map(|v| (v, label(v))).collect();
    let yt: Vec<(f64, String)> = linear_ticks(0.0, frame.y.1).into_iter().map(|v| (v, format!("{v:.2}"))).collect();
    axes(&mut s, &frame, &xt, &yt, "n·d²", "density");
    let kde_pts = e.kde.grid.iter().copied().zip(e.kde.density.iter().copied()).filter(|(x, _)| *x >= x_lo);
    s += &frame.polyline(kde_pts, "stroke=\"#1f77b4\" stroke-width=\"2\"");
    s += &frame.polyline(
        ref_grid.iter().copied().zip(ref_pdf.iter().copied()),
        "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"",
    );
    legend(
        &mut s,
        &[
            ("stroke=\"#1f77b4\" stroke-width=\"2\"", "kernel density"),
            ("stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"", &format!("χ² with {} dof", e.dof)),
        ],
    );
    s += "</svg>\n";
    s
}
