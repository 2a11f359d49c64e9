//! Barcode rendering: plain text with ASCII bars, or standalone SVG with
//! horizontal bars grouped by dimension. Infinite deaths run to the right
//! margin and end in an arrowhead.

use crate::simplex::Interval;

#[derive(Debug, Clone, Copy)]
pub struct PlotOptions {
    /// Intervals with death - birth below this are dropped (open intervals
    /// always stay).
    pub min_length: f64,
    /// Character width of the text bar column.
    pub text_width: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            min_length: 0.0,
            text_width: 60,
        }
    }
}

fn filtered_sorted(intervals: &[Interval], options: &PlotOptions) -> Vec<Interval> {
    let mut out: Vec<Interval> = intervals
        .iter()
        .filter(|iv| iv.is_open() || iv.length() >= options.min_length)
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Upper bound of the drawing range: the largest finite value in the
/// barcode, with fallbacks so degenerate inputs still render.
fn scale_end(intervals: &[Interval]) -> f64 {
    let mut end = 0.0f64;
    for iv in intervals {
        end = end.max(iv.birth);
        if !iv.is_open() {
            end = end.max(iv.death);
        }
    }
    if end > 0.0 {
        end
    } else {
        1.0
    }
}

pub fn render_text(intervals: &[Interval], options: &PlotOptions) -> String {
    let bars = filtered_sorted(intervals, options);
    if bars.is_empty() {
        return String::new();
    }
    let end = scale_end(&bars);
    let width = options.text_width.max(10);
    let column = |value: f64| -> usize {
        (((value / end) * width as f64).round() as usize).min(width)
    };
    let mut out = String::new();
    let mut current_dim = usize::MAX;
    for iv in &bars {
        if iv.dimension != current_dim {
            current_dim = iv.dimension;
            out.push_str(&format!("# H{current_dim}\n"));
        }
        let start = column(iv.birth);
        let mut line = format!("{} {} {} |", iv.dimension, iv.birth, iv.death);
        line.extend(std::iter::repeat(' ').take(start));
        if iv.is_open() {
            let fill = width.saturating_sub(start);
            line.extend(std::iter::repeat('=').take(fill));
            line.push('>');
        } else {
            let stop = column(iv.death);
            let fill = (stop - start).max(1);
            line.extend(std::iter::repeat('=').take(fill));
            let pad = width.saturating_sub(start + fill);
            line.extend(std::iter::repeat(' ').take(pad));
            line.push('|');
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

const SVG_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub fn render_svg(intervals: &[Interval], options: &PlotOptions) -> String {
    let bars = filtered_sorted(intervals, options);
    let margin = 40.0;
    let plot_width = 720.0;
    let bar_height = 6.0;
    let bar_gap = 4.0;
    let group_gap = 18.0;
    let end = scale_end(&bars);
    let x = |value: f64| margin + (value / end) * plot_width;

    let mut body = String::new();
    let mut y = margin;
    let mut dim_start = 0;
    while dim_start < bars.len() {
        let dim = bars[dim_start].dimension;
        let dim_end = bars[dim_start..]
            .iter()
            .position(|iv| iv.dimension != dim)
            .map(|p| dim_start + p)
            .unwrap_or(bars.len());
        let color = SVG_COLORS[dim % SVG_COLORS.len()];
        body.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{color}\">H{dim}</text>\n",
            margin - 30.0,
            y + bar_height,
        ));
        for iv in &bars[dim_start..dim_end] {
            let x0 = x(iv.birth);
            if iv.is_open() {
                let x1 = margin + plot_width;
                body.push_str(&format!(
                    "  <rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{bar_height}\" fill=\"{color}\"/>\n",
                    (x1 - x0).max(1.0),
                ));
                // Arrowhead past the right margin marks an open interval.
                body.push_str(&format!(
                    "  <polygon points=\"{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{color}\"/>\n",
                    x1,
                    y - 2.0,
                    x1 + 10.0,
                    y + bar_height / 2.0,
                    x1,
                    y + bar_height + 2.0,
                ));
            } else {
                let width = (x(iv.death) - x0).max(1.0);
                body.push_str(&format!(
                    "  <rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{width:.2}\" height=\"{bar_height}\" fill=\"{color}\"/>\n",
                ));
            }
            y += bar_height + bar_gap;
        }
        y += group_gap;
        dim_start = dim_end;
    }

    // Axis with start/end ticks.
    let axis_y = y;
    body.push_str(&format!(
        "  <line x1=\"{margin}\" y1=\"{axis_y:.1}\" x2=\"{:.1}\" y2=\"{axis_y:.1}\" stroke=\"#444\"/>\n",
        margin + plot_width,
    ));
    body.push_str(&format!(
        "  <text x=\"{margin}\" y=\"{:.1}\" font-size=\"10\" fill=\"#444\">0</text>\n",
        axis_y + 14.0,
    ));
    body.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" fill=\"#444\" text-anchor=\"end\">{end}</text>\n",
        margin + plot_width,
        axis_y + 14.0,
    ));

    let total_height = axis_y + 24.0;
    let total_width = margin * 2.0 + plot_width + 12.0;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_width:.0}\" height=\"{total_height:.0}\" viewBox=\"0 0 {total_width:.0} {total_height:.0}\">\n{body}</svg>\n"
    )
}
