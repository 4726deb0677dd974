//! SVG line chart for mean deletion curves.
//!
//! The chart is a fixed-size SVG 1.1 document built by string assembly:
//! fraction removed on the x axis, mean target confidence on the y axis,
//! one polyline per method with a legend on the right. Coordinates are
//! formatted with fixed precision so identical inputs produce identical
//! bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::MeanCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn check_curves(curves: &[MeanCurve]) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Config("no curves to render".into()));
    }
    for curve in curves {
        if curve.fractions_removed.is_empty() {
            return Err(Error::Config(format!(
                "curve for {:?} has no points",
                curve.method
            )));
        }
        if curve.fractions_removed.len() != curve.mean_confidences.len() {
            return Err(Error::Dimension(format!(
                "curve for {:?} has {} fractions but {} confidences",
                curve.method,
                curve.fractions_removed.len(),
                curve.mean_confidences.len()
            )));
        }
        let finite = curve
            .fractions_removed
            .iter()
            .chain(&curve.mean_confidences)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite(format!("curve for {:?}", curve.method)));
        }
    }
    Ok(())
}

fn x_px(fraction: f64) -> f64 {
    MARGIN_LEFT + fraction.clamp(0.0, 1.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y_px(confidence: f64) -> f64 {
    MARGIN_TOP + (1.0 - confidence.clamp(0.0, 1.0)) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
}

fn curves_document(curves: &[MeanCurve]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));

    let (x0, x1) = (x_px(0.0), x_px(1.0));
    let (y0, y1) = (y_px(0.0), y_px(1.0));
    s.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"#333333\"/>\n"
    ));
    s.push_str(&format!(
        "  <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"#333333\"/>\n"
    ));
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let tx = x_px(t);
        let ty = y_px(t);
        s.push_str(&format!(
            "  <line x1=\"{tx:.2}\" y1=\"{y0:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"#333333\"/>\n",
            y0 + 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{tx:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{t:.1}</text>\n",
            y0 + 20.0
        ));
        s.push_str(&format!(
            "  <line x1=\"{x0:.2}\" y1=\"{ty:.2}\" x2=\"{:.2}\" y2=\"{ty:.2}\" stroke=\"#333333\"/>\n",
            x0 - 5.0
        ));
        s.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{t:.1}</text>\n",
            x0 - 9.0,
            ty + 4.0
        ));
    }
    s.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">fraction removed</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    ));
    s.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">mean confidence</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .fractions_removed
            .iter()
            .zip(&curve.mean_confidences)
            .map(|(&f, &c)| format!("{:.2},{:.2}", x_px(f), y_px(c)))
            .collect();
        s.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            points.join(" ")
        ));
        let ly = MARGIN_TOP + 14.0 + i as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT + 16.0;
        s.push_str(&format!(
            "  <line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            ly - 4.0,
            lx + 22.0,
            ly - 4.0
        ));
        s.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            lx + 28.0,
            escape_xml(&curve.method)
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Renders mean deletion curves as an SVG line chart with a legend.
pub fn render_curves(curves: &[MeanCurve], path: &Path) -> Result<()> {
    check_curves(curves)?;
    fs::write(path, curves_document(curves))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(method: &str, fractions: Vec<f64>, confidences: Vec<f64>) -> MeanCurve {
        MeanCurve {
            method: method.into(),
            fractions_removed: fractions,
            mean_confidences: confidences,
        }
    }

    /// Minimal well-formedness scan: tags balance, attributes are quoted,
    /// and no raw `<` or `&` appears in text content.
    fn assert_well_formed(xml: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = xml;
        while let Some(open) = rest.find('<') {
            let text = &rest[..open];
            assert!(
                !text.contains('&') || text.contains("&amp;"),
                "unescaped ampersand in text"
            );
            let close = rest[open..].find('>').expect("unclosed tag") + open;
            let tag = &rest[open + 1..close];
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name.trim()), "tag mismatch");
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                let name = tag.split_whitespace().next().unwrap().to_string();
                let attrs = &tag[name.len()..];
                assert_eq!(
                    attrs.matches('"').count() % 2,
                    0,
                    "unbalanced attribute quotes in <{name}>"
                );
                stack.push(name);
            }
            rest = &rest[close + 1..];
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
        assert!(!rest.contains('<'));
    }

    #[test]
    fn one_polyline_and_legend_entry_per_method() {
        let curves = vec![
            curve("xwp", vec![0.0, 0.5, 1.0], vec![0.9, 0.5, 0.1]),
            curve("occlusion", vec![0.0, 0.5, 1.0], vec![0.8, 0.6, 0.2]),
        ];
        let doc = curves_document(&curves);
        assert_eq!(doc.matches("<polyline").count(), 2);
        assert!(doc.contains(">xwp</text>"));
        assert!(doc.contains(">occlusion</text>"));
        assert_well_formed(&doc);
    }

    #[test]
    fn constant_curve_draws_a_horizontal_polyline() {
        let doc = curves_document(&[curve("flat", vec![0.0, 0.5, 1.0], vec![0.4, 0.4, 0.4])]);
        let points = doc
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        let ys: Vec<&str> = points
            .split_whitespace()
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]), "ys vary: {ys:?}");
    }

    #[test]
    fn identical_curves_draw_coincident_polylines_with_two_legends() {
        let a = curve("first", vec![0.0, 1.0], vec![0.7, 0.2]);
        let mut b = a.clone();
        b.method = "second".into();
        let doc = curves_document(&[a, b]);
        let points: Vec<&str> = doc
            .split("points=\"")
            .skip(1)
            .map(|s| s.split('"').next().unwrap())
            .collect();
        assert_eq!(points[0], points[1]);
        assert!(doc.contains(">first</text>"));
        assert!(doc.contains(">second</text>"));
    }

    #[test]
    fn method_names_are_escaped_for_xml() {
        let doc = curves_document(&[curve("a<b&c", vec![0.0], vec![0.5])]);
        assert!(doc.contains("a&lt;b&amp;c"));
        assert_well_formed(&doc);
    }

    #[test]
    fn written_file_is_deterministic_and_well_formed() {
        let curves = vec![curve("xwp", vec![0.0, 0.3, 0.6], vec![0.9, 0.4, 0.3])];
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        render_curves(&curves, &p1).unwrap();
        render_curves(&curves, &p2).unwrap();
        let bytes = fs::read(&p1).unwrap();
        assert_eq!(bytes, fs::read(&p2).unwrap());
        assert_well_formed(std::str::from_utf8(&bytes).unwrap());
    }

    #[test]
    fn empty_or_inconsistent_curve_sets_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.svg");
        assert!(matches!(
            render_curves(&[], &path).unwrap_err(),
            Error::Config(_)
        ));
        let bad = curve("m", vec![0.0, 1.0], vec![0.5]);
        assert!(matches!(
            render_curves(&[bad], &path).unwrap_err(),
            Error::Dimension(_)
        ));
        let nan = curve("m", vec![0.0], vec![f64::NAN]);
        assert!(matches!(
            render_curves(&[nan], &path).unwrap_err(),
            Error::NonFinite(_)
        ));
    }
}
