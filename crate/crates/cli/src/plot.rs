//! Line plots of H vectors as standalone SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT_PLAIN: f64 = 20.0;
const RIGHT_LEGEND: f64 = 200.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn colour(i: usize, count: usize) -> String {
    let hue = (i * 360) / count.max(1);
    format!("hsl({hue},70%,40%)")
}

/// Renders labelled vectors as one polyline each; a legend is added when
/// there is more than one.
pub fn render_svg(vectors: &[(String, Vec<f64>)]) -> CliResult<String> {
    if vectors.is_empty() {
        return Err(CliError::invalid("plot needs at least one vector"));
    }
    if vectors
        .iter()
        .any(|(_, v)| v.is_empty() || v.iter().any(|x| !x.is_finite()))
    {
        return Err(CliError::invalid(
            "plot vectors must be non-empty and finite",
        ));
    }
    let legend = vectors.len() > 1;
    let right = if legend { RIGHT_LEGEND } else { RIGHT_PLAIN };
    let (pw, ph) = (WIDTH - LEFT - right, HEIGHT - TOP - BOTTOM);
    let len = vectors.iter().map(|(_, v)| v.len()).max().unwrap_or(1);
    let all = vectors.iter().flat_map(|(_, v)| v.iter().copied());
    let (mut lo, mut hi) = all.fold((0.0f64, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi <= lo {
        hi = lo + 1.0;
    }
    if lo > 0.0 {
        lo = 0.0;
    }
    let x_of = |t: usize| {
        LEFT + if len > 1 {
            pw * t as f64 / (len - 1) as f64
        } else {
            pw / 2.0
        }
    };
    let y_of = |v: f64| TOP + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(s, r##"<g stroke="#ddd" stroke-width="1">"##);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let x = LEFT + pw * f;
        let y = TOP + ph * (1.0 - f);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            LEFT + pw
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g fill="#333">"##);
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let step = 1.0 + f * (len.saturating_sub(1)) as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw * f,
            TOP + ph + 16.0,
            step.round()
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            LEFT - 6.0,
            TOP + ph * (1.0 - f) + 4.0,
            lo + f * (hi - lo)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">aligned time step</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">H</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(s, "</g>");

    for (i, (label, v)) in vectors.iter().enumerate() {
        let mut points = String::new();
        for (t, &x) in v.iter().enumerate() {
            if t > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", x_of(t), y_of(x));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{points}"><title>{}</title></polyline>"#,
            colour(i, vectors.len()),
            escape(label)
        );
    }

    if legend {
        let x = WIDTH - RIGHT_LEGEND + 12.0;
        let _ = writeln!(s, r#"<g class="legend">"#);
        for (i, (label, _)) in vectors.iter().enumerate() {
            let y = TOP + 8.0 + 15.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 18.0,
                colour(i, vectors.len()),
                x + 24.0,
                y + 4.0,
                escape(label)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(vectors: &[(String, Vec<f64>)], path: &Path) -> CliResult<()> {
    let svg = render_svg(vectors)?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(s: &str, needle: &str) -> usize {
        s.matches(needle).count()
    }

    #[test]
    fn single_vector_has_one_polyline_and_no_legend() {
        let svg = render_svg(&[("a".into(), vec![0.1, 0.5, 0.2])]).unwrap();
        assert_eq!(count(&svg, "<polyline"), 1);
        assert!(!svg.contains("legend"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn many_vectors_get_a_legend() {
        let vectors: Vec<_> = (0..28)
            .map(|i| {
                (
                    format!("net-{i}"),
                    (0..50).map(|t| ((t + i) as f64).sin().abs()).collect(),
                )
            })
            .collect();
        let svg = render_svg(&vectors).unwrap();
        assert_eq!(count(&svg, "<polyline"), 28);
        assert!(svg.contains(r#"class="legend""#));
        assert!(svg.contains(">net-27</text>"));
    }

    #[test]
    fn empty_set_is_rejected() {
        assert_eq!(render_svg(&[]).unwrap_err().exit_code(), 6);
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let v = vec![
            ("<a&b>".to_string(), vec![1.0, 2.0]),
            ("c".into(), vec![0.5]),
        ];
        let a = render_svg(&v).unwrap();
        assert_eq!(a, render_svg(&v).unwrap());
        assert!(a.contains("&lt;a&amp;b&gt;"));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = emit_plot(
            &[("a".into(), vec![1.0])],
            Path::new("/nonexistent/dir/p.svg"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
