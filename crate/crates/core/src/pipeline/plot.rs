use std::fmt::Write;

use crate::wavelet::EnergySeries;
use crate::window::WindowSelection;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const PAD: f64 = 40.0;

fn polyline(values: &[f64], max: f64, color: &str) -> String {
    let n = values.len().max(2) - 1;
    let mut pts = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = PAD + (WIDTH - 2.0 * PAD) * i as f64 / n as f64;
        let y = HEIGHT - PAD - (HEIGHT - 2.0 * PAD) * v / max;
        let _ = write!(pts, "{x:.2},{y:.2} ");
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
        pts.trim_end()
    )
}

/// Line plot of raw and filtered energy, with the selected window shaded.
pub fn energy_svg(energy: &EnergySeries, selection: Option<&WindowSelection>) -> String {
    let max = energy
        .raw
        .iter()
        .chain(&energy.filtered)
        .fold(0.0f64, |m, &v| m.max(v));
    let max = if max > 0.0 { max } else { 1.0 };
    let n = energy.len().max(2) - 1;
    let x_of = |i: usize| PAD + (WIDTH - 2.0 * PAD) * (i.min(n)) as f64 / n as f64;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if let Some(s) = selection {
        let x0 = x_of(s.start_frame);
        let x1 = x_of(s.end_frame.saturating_sub(1));
        let _ = writeln!(
            svg,
            "<rect x=\"{x0:.2}\" y=\"{PAD}\" width=\"{:.2}\" height=\"{}\" fill=\"#f4a259\" fill-opacity=\"0.3\"/>",
            (x1 - x0).max(1.0),
            HEIGHT - 2.0 * PAD
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>",
        b = HEIGHT - PAD,
        r = WIDTH - PAD
    );
    if !energy.is_empty() {
        svg.push_str(&polyline(&energy.raw, max, "#9aa0a6"));
        svg.push_str(&polyline(&energy.filtered, max, "#1f5fbf"));
    }
    let _ = writeln!(
        svg,
        "<text x=\"{PAD}\" y=\"24\" font-family=\"sans-serif\" font-size=\"13\">energy (grey raw, blue filtered), peak {max:.3}</text>\n</svg>"
    );
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaded() {
        let e = EnergySeries::from_raw(vec![0.0, 1.0, 3.0, 1.0, 0.0]);
        let sel = WindowSelection {
            start_frame: 1,
            end_frame: 4,
            start_seconds: 0.1,
            duration_seconds: 0.3,
            window_energy: 5.0,
            boundary_adjusted: false,
            whole_video: false,
        };
        let a = energy_svg(&e, Some(&sel));
        assert_eq!(a, energy_svg(&e, Some(&sel)));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("fill-opacity"));
        assert!(!energy_svg(&e, None).contains("fill-opacity"));
        assert!(energy_svg(&EnergySeries::from_raw(vec![]), None).ends_with("</svg>\n"));
    }
}
