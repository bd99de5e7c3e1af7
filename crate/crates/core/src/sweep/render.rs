//! CSV, SVG and JSON output for classification diagrams.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Cell, ClassificationDiagram, Fit};
use crate::error::Result;

const PALETTE: [&str; 8] = ["#9ecae1", "#fdae6b", "#a1d99b", "#bcbddc", "#fc9272", "#d9d9d9", "#fdd0a2", "#c7e9c0"];
const AMBIGUOUS_FILL: &str = "#ffffff";
const NOT_DEFINED_FILL: &str = "#636363";

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub json: PathBuf,
}

/// Long-form table, one row per grid point.
pub fn to_csv(d: &ClassificationDiagram) -> String {
    let mut s = format!("{},{},label\n", d.axis_names.0, d.axis_names.1);
    for (j, row) in d.labels.iter().enumerate() {
        for (i, c) in row.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", d.x[i], d.y[j], c);
        }
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fill(d: &ClassificationDiagram, c: &Cell) -> &'static str {
    match c {
        Cell::Label(l) => {
            let k = d.label_set.iter().position(|x| x == l).unwrap_or(d.label_set.len());
            PALETTE[k % PALETTE.len()]
        }
        Cell::Ambiguous => AMBIGUOUS_FILL,
        Cell::NotDefined => NOT_DEFINED_FILL,
    }
}

/// Cell edges: midpoints between neighbouring grid values (in log or linear
/// coordinates) extended by half a cell at the ends.
fn edges(v: &[f64], log: bool) -> Vec<f64> {
    let t: Vec<f64> = v.iter().map(|x| if log { x.ln() } else { *x }).collect();
    let n = t.len();
    let mut e = Vec::with_capacity(n + 1);
    if n == 1 {
        e.push(t[0] - 0.5);
        e.push(t[0] + 0.5);
    } else {
        e.push(t[0] - 0.5 * (t[1] - t[0]));
        for k in 0..n - 1 {
            e.push(0.5 * (t[k] + t[k + 1]));
        }
        e.push(t[n - 1] + 0.5 * (t[n - 1] - t[n - 2]));
    }
    e
}

/// Region map with fitted curves. Axes on which the property is not defined
/// are drawn dashed.
pub fn to_svg(d: &ClassificationDiagram) -> String {
    let log = d.grid.log;
    let ex = edges(&d.x, log);
    let ey = edges(&d.y, log);
    let (x0, x1) = (ex[0], *ex.last().unwrap());
    let (y0, y1) = (ey[0], *ey.last().unwrap());
    let px = |t: f64| MARGIN + (t - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |t: f64| H - MARGIN - (t - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let tr = |v: f64| if log { v.ln() } else { v };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", esc(&d.name));

    for cell in d.distinct() {
        let _ = writeln!(s, r#"<g class="region" data-label="{}" fill="{}">"#, esc(&cell.to_string()), fill(d, &cell));
        for (j, row) in d.labels.iter().enumerate() {
            for (i, c) in row.iter().enumerate() {
                if *c == cell {
                    let (xa, xb) = (px(ex[i]), px(ex[i + 1]));
                    let (ya, yb) = (py(ey[j + 1]), py(ey[j]));
                    let _ = writeln!(s, r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}"/>"#, xb - xa, yb - ya);
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }

    if !d.fits.is_empty() {
        let _ = writeln!(s, r##"<g class="fits" fill="none" stroke="#08306b" stroke-width="2">"##);
        for fit in &d.fits {
            let mut pts = String::new();
            for k in 0..=200 {
                let t = x0 + (x1 - x0) * k as f64 / 200.0;
                let xv = if log { t.exp() } else { t };
                let yv = fit.eval(xv);
                if yv.is_finite() && yv > 0.0 {
                    let ty = tr(yv);
                    if ty >= y0 && ty <= y1 {
                        let _ = write!(pts, "{:.2},{:.2} ", px(t), py(ty));
                    }
                }
            }
            let name = match fit {
                Fit::PowerLaw(f) => format!("kappa={:.4} p={:.4}", f.kappa, f.p),
                Fit::ExpLaw(f) => format!("c={:.4} H={:.4}", f.c, f.h),
            };
            let _ = writeln!(s, r#"<polyline data-fit="{}" points="{}"/>"#, esc(&name), pts.trim_end());
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1.5">"#);
    let dash = |c: &Cell| if *c == Cell::NotDefined { r#" stroke-dasharray="6,4""# } else { "" };
    let (l, r, b, t) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<line class="x-axis" x1="{l}" y1="{b}" x2="{r}" y2="{b}"{}/>"#, dash(&d.axis_labels.eps_axis));
    let _ = writeln!(s, r#"<line class="y-axis" x1="{l}" y1="{b}" x2="{l}" y2="{t}"{}/>"#, dash(&d.axis_labels.delta_axis));
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="annotations" font-family="sans-serif" font-size="12">"#);
    let scale = if log { " (log)" } else { "" };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}{scale}</text>"#, W / 2.0, H - 20.0, esc(&d.axis_names.0));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}{scale}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(&d.axis_names.1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{} axis: {}</text>"#,
        MARGIN,
        H - 38.0,
        esc(&d.axis_names.0),
        esc(&d.axis_labels.eps_axis.to_string())
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}">{} axis: {}, origin: {}</text>"#, MARGIN, 40.0, esc(&d.axis_names.1),
        esc(&d.axis_labels.delta_axis.to_string()), esc(&d.axis_labels.origin.to_string()));
    for (k, fmt_val) in [(0, d.x[0]), (1, *d.x.last().unwrap())] {
        let xp = if k == 0 { l } else { r };
        let _ = writeln!(s, r#"<text x="{xp}" y="{}" text-anchor="middle">{fmt_val:.3e}</text>"#, b + 14.0);
    }
    for (k, fmt_val) in [(0, d.y[0]), (1, *d.y.last().unwrap())] {
        let yp = if k == 0 { b } else { t };
        let _ = writeln!(s, r#"<text x="{}" y="{yp}" text-anchor="end">{fmt_val:.3e}</text>"#, l - 4.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

/// Writes `<name>.csv`, `<name>.svg` and `<name>.json` into `dir`.
pub fn render(d: &ClassificationDiagram, dir: &Path) -> Result<RenderedFiles> {
    fs::create_dir_all(dir)?;
    let stem: String = d.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    let files = RenderedFiles {
        csv: dir.join(format!("{stem}.csv")),
        svg: dir.join(format!("{stem}.svg")),
        json: dir.join(format!("{stem}.json")),
    };
    fs::write(&files.csv, to_csv(d))?;
    fs::write(&files.svg, to_svg(d))?;
    fs::write(&files.json, d.to_json()?)?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn diagram() -> ClassificationDiagram {
        let e = FnEvaluator::new("demo <&>", &["lo", "hi"], |x, y, _| {
            Ok(if (x - y).abs() < 1e-12 { Cell::Ambiguous } else if y > x { Cell::label("hi") } else { Cell::label("lo") })
        })
        .with_axes(AxisLabels { eps_axis: Cell::label("lo"), ..Default::default() });
        sweep(&e, &GridSpec::log((0.01, 1.0), (0.01, 1.0), 6, 4), 3, 0).unwrap()
    }

    #[test]
    fn csv_rows() {
        let d = diagram();
        let csv = to_csv(&d);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "eps,delta,label");
        assert_eq!(lines.len() - 1, 24);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[0].parse::<f64>().unwrap(), d.x[0]);
    }

    #[test]
    fn svg_structure() {
        let mut d = diagram();
        let svg = to_svg(&d);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let regions: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("region")).collect();
        assert_eq!(regions.len(), d.distinct().len());
        let cells: usize = regions.iter().map(|g| g.children().filter(|c| c.has_tag_name("rect")).count()).sum();
        assert_eq!(cells, 24);
        assert!(!svg.contains("<polyline"));
        let y_axis = doc.descendants().find(|n| n.attribute("class") == Some("y-axis")).unwrap();
        assert!(y_axis.attribute("stroke-dasharray").is_some());
        let x_axis = doc.descendants().find(|n| n.attribute("class") == Some("x-axis")).unwrap();
        assert!(x_axis.attribute("stroke-dasharray").is_none());

        d.fits.push(Fit::PowerLaw(PowerLawFit { kappa: 1.0, p: 1.0, p_se: 0.0, log_kappa_se: 0.0, residual: 0.0, support: 6, low_support: false }));
        let doc_svg = to_svg(&d);
        let doc = roxmltree::Document::parse(&doc_svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 1);
    }

    #[test]
    fn render_writes_files() {
        let d = diagram();
        let dir = std::env::temp_dir().join(format!("dlimit-render-{}", std::process::id()));
        let files = render(&d, &dir).unwrap();
        assert!(files.csv.ends_with("demo____.csv"));
        let back = ClassificationDiagram::from_json(&std::fs::read_to_string(&files.json).unwrap()).unwrap();
        assert_eq!(back, d);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
