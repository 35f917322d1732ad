//! SVG scatter plots: the per-region scaling law and the growth quadratics.
//!
//! Every plot is an 800 x 600 viewport. A data value `v` on an axis spanning
//! `[min, max]` maps linearly to pixels:
//!
//! ```text
//! px = 70 + (v - min) / (max - min) * 710      (left 70, right 20)
//! py = 540 - (v - min) / (max - min) * 500     (top 40, bottom 60)
//! ```
//!
//! Axis spans cover the data and the fitted curve. A zero span is widened
//! to `[v - 0.5, v + 0.5]`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid_io::Region;
use crate::pipeline::CorpusRow;
use crate::stats::{fit_growth_model, fit_scaling, CompactnessIndex, ModelSpec};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 20.0;
pub const MARGIN_TOP: f64 = 40.0;
pub const MARGIN_BOTTOM: f64 = 60.0;
pub const MIN_POINTS: usize = 3;
const CURVE_SAMPLES: usize = 100;

/// Linear map from a data interval onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub min: f64,
    pub max: f64,
    pub px_min: f64,
    pub px_max: f64,
}

impl AxisMap {
    pub fn new(values: impl IntoIterator<Item = f64>, px_min: f64, px_max: f64) -> Self {
        let (mut min, mut max) = values
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !min.is_finite() {
            (min, max) = (0.0, 1.0);
        } else if max == min {
            (min, max) = (min - 0.5, max + 0.5);
        }
        AxisMap {
            min,
            max,
            px_min,
            px_max,
        }
    }

    pub fn x(values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(values, MARGIN_LEFT, WIDTH - MARGIN_RIGHT)
    }

    pub fn y(values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(values, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP)
    }

    pub fn map(&self, v: f64) -> f64 {
        self.px_min + (v - self.min) / (self.max - self.min) * (self.px_max - self.px_min)
    }
}

/// A scatter plot with an optional fitted curve, given in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub curve: Vec<(f64, f64)>,
}

impl Scatter {
    pub fn axes(&self) -> (AxisMap, AxisMap) {
        let all = || self.points.iter().chain(&self.curve);
        (AxisMap::x(all().map(|p| p.0)), AxisMap::y(all().map(|p| p.1)))
    }

    /// Fails when there are fewer than three points.
    pub fn to_svg(&self) -> Result<String> {
        if self.points.len() < MIN_POINTS {
            return Err(Error::invalid(format!(
                "plot {:?} needs at least {MIN_POINTS} points, got {}",
                self.title,
                self.points.len()
            )));
        }
        let (ax, ay) = self.axes();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
        let _ = writeln!(s, r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
        for (axis, v, px, py, anchor) in [
            (&ax, ax.min, x0, y0 + 18.0, "middle"),
            (&ax, ax.max, x1, y0 + 18.0, "middle"),
            (&ay, ay.min, x0 - 6.0, y0 + 4.0, "end"),
            (&ay, ay.max, x0 - 6.0, y1 + 4.0, "end"),
        ] {
            let _ = axis;
            let _ = writeln!(
                s,
                r#"<text class="tick" x="{px:.2}" y="{py:.2}" text-anchor="{anchor}" font-size="11">{}</text>"#,
                tick(v)
            );
        }
        for &(x, y) in &self.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
                ax.map(x),
                ay.map(y)
            );
        }
        if self.curve.len() >= 2 {
            let pts: Vec<String> = self
                .curve
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", ax.map(x), ay.map(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="fit" points="{}" fill="none" stroke="firebrick" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

fn tick(v: f64) -> String {
    format!("{:.3}", v)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `ln N` against `ln P` with the fitted line across the observed range.
pub fn scaling_plot(rows: &[CorpusRow], region: Region) -> Scatter {
    let members: Vec<&CorpusRow> = rows.iter().filter(|r| r.region == region).collect();
    let points: Vec<(f64, f64)> = members
        .iter()
        .map(|r| (r.population.ln(), (r.n_hotspots as f64).ln()))
        .collect();
    let obs: Vec<_> = members.iter().map(|r| r.scaling_observation()).collect();
    let curve = match fit_scaling(&obs) {
        Ok(fit) => {
            let (lo, hi) = x_range(&points);
            vec![
                (lo, fit.log_intercept + fit.beta * lo),
                (hi, fit.log_intercept + fit.beta * hi),
            ]
        }
        Err(_) => Vec::new(),
    };
    Scatter {
        title: format!("Hotspot scaling, {region}"),
        x_label: "ln population".into(),
        y_label: "ln hotspot count".into(),
        points,
        curve,
    }
}

/// `ln(GDP/km²)` against the index, with the quadratic model's curve
/// evaluated at the mean `ln population`.
pub fn growth_plot(rows: &[CorpusRow], region: Region, index: CompactnessIndex) -> Scatter {
    let members: Vec<&CorpusRow> = rows.iter().filter(|r| r.region == region).collect();
    let value = |r: &CorpusRow| match index {
        CompactnessIndex::Proximity => r.pi,
        CompactnessIndex::Agglomeration => r.ai,
    };
    let points: Vec<(f64, f64)> = members
        .iter()
        .map(|r| (value(r), r.gdp_per_km2().ln()))
        .collect();
    let model = match index {
        CompactnessIndex::Proximity => ModelSpec::M3PopPiSq,
        CompactnessIndex::Agglomeration => ModelSpec::M5PopAiSq,
    };
    let obs: Vec<_> = members.iter().map(|r| r.growth_observation()).collect();
    let curve = match fit_growth_model(&obs, model) {
        Ok(fit) if !members.is_empty() => {
            let b = fit.estimates();
            let mean_ln_pop =
                members.iter().map(|r| r.population.ln()).sum::<f64>() / members.len() as f64;
            let (lo, hi) = x_range(&points);
            (0..=CURVE_SAMPLES)
                .map(|i| {
                    let c = lo + (hi - lo) * i as f64 / CURVE_SAMPLES as f64;
                    (c, b[0] + b[1] * mean_ln_pop + b[2] * c + b[3] * c * c)
                })
                .collect()
        }
        _ => Vec::new(),
    };
    Scatter {
        title: format!("Growth against {}, {region}", index.name()),
        x_label: index.name().into(),
        y_label: "ln GDP per km²".into(),
        points,
        curve,
    }
}

fn x_range(points: &[(f64, f64)]) -> (f64, f64) {
    points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
}

/// Writes `scaling_<R>.svg`, `growth_pi_<R>.svg` and `growth_ai_<R>.svg` for
/// every region with at least three cities. Fails without writing anything
/// when no region qualifies.
pub fn write_report(rows: &[CorpusRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut regions: Vec<Region> = rows.iter().map(|r| r.region).collect();
    regions.sort();
    regions.dedup();
    let mut docs = Vec::new();
    for region in regions {
        if rows.iter().filter(|r| r.region == region).count() < MIN_POINTS {
            continue;
        }
        docs.push((format!("scaling_{region}.svg"), scaling_plot(rows, region).to_svg()?));
        docs.push((
            format!("growth_pi_{region}.svg"),
            growth_plot(rows, region, CompactnessIndex::Proximity).to_svg()?,
        ));
        docs.push((
            format!("growth_ai_{region}.svg"),
            growth_plot(rows, region, CompactnessIndex::Agglomeration).to_svg()?,
        ));
    }
    if docs.is_empty() {
        return Err(Error::invalid(format!(
            "report needs at least {MIN_POINTS} cities in some region"
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, svg) in docs {
        let path = out_dir.join(name);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
