use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named colour ramp, sampled by piecewise-linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    Grayscale,
    /// black, red, yellow, white
    Heat,
    #[default]
    Viridis,
}

impl Palette {
    fn stops(self) -> &'static [[u8; 3]] {
        match self {
            Palette::Grayscale => &[[0, 0, 0], [255, 255, 255]],
            Palette::Heat => &[[0, 0, 0], [255, 0, 0], [255, 255, 0], [255, 255, 255]],
            Palette::Viridis => &[
                [68, 1, 84],
                [59, 82, 139],
                [33, 145, 140],
                [94, 201, 98],
                [253, 231, 37],
            ],
        }
    }

    /// Colour at `t ∈ [0, 1]`.
    pub fn color(self, t: f64) -> [u8; 3] {
        let stops = self.stops();
        let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
        let lo = (t.floor() as usize).min(stops.len() - 2);
        let frac = t - lo as f64;
        let mut out = [0u8; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let a = f64::from(stops[lo][ch]);
            let b = f64::from(stops[lo + 1][ch]);
            *o = (a + (b - a) * frac).round() as u8;
        }
        out
    }
}

impl FromStr for Palette {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grayscale" | "gray" | "grey" => Ok(Palette::Grayscale),
            "heat" => Ok(Palette::Heat),
            "viridis" => Ok(Palette::Viridis),
            _ => Err(Error::validation(
                "palette",
                format!("unknown palette {s:?} (grayscale, heat, viridis)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary portable pixmap, 8 bits per channel.
    Ppm,
    Svg,
}

impl ImageFormat {
    /// Guesses the format from a file extension.
    pub fn from_extension(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ppm" => Some(ImageFormat::Ppm),
            "svg" => Some(ImageFormat::Svg),
            _ => None,
        }
    }
}

/// How values map onto the palette.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Normalization {
    /// Min-max over this field.
    #[default]
    PerImage,
    /// Fixed range shared across images.
    Fixed { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSpec {
    pub format: ImageFormat,
    /// Pixels per cell edge.
    pub cell_size: u32,
    pub normalization: Normalization,
}

impl ImageSpec {
    pub fn new(format: ImageFormat) -> Self {
        Self {
            format,
            cell_size: 1,
            normalization: Normalization::PerImage,
        }
    }
}

/// Renders a row-major `height × width` field as PPM or SVG bytes.
///
/// A field with no spread renders every cell in the palette's midpoint colour.
pub fn render_heatmap(
    values: &[f64],
    height: usize,
    width: usize,
    palette: Palette,
    spec: ImageSpec,
) -> Result<Vec<u8>> {
    if values.is_empty() || height == 0 || width == 0 {
        return Err(Error::validation("values", "cannot render an empty field"));
    }
    if values.len() != height * width {
        return Err(Error::validation(
            "values",
            format!(
                "{} values do not fill a {height}x{width} field",
                values.len()
            ),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(
            "values",
            "field contains non-finite values",
        ));
    }
    if spec.cell_size == 0 {
        return Err(Error::validation("cell_size", "must be at least 1"));
    }
    let (lo, hi) = match spec.normalization {
        Normalization::PerImage => values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            }),
        Normalization::Fixed { min, max } => (min, max),
    };
    let colors: Vec<[u8; 3]> = values
        .iter()
        .map(|&v| {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            palette.color(t)
        })
        .collect();

    let cell = spec.cell_size as usize;
    Ok(match spec.format {
        ImageFormat::Ppm => {
            let (px_w, px_h) = (width * cell, height * cell);
            let mut out = format!("P6\n{px_w} {px_h}\n255\n").into_bytes();
            out.reserve(3 * px_w * px_h);
            for r in 0..px_h {
                let row = &colors[(r / cell) * width..(r / cell + 1) * width];
                for c in 0..px_w {
                    out.extend_from_slice(&row[c / cell]);
                }
            }
            out
        }
        ImageFormat::Svg => {
            let mut s = String::new();
            let (px_w, px_h) = (width * cell, height * cell);
            let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
            let _ = writeln!(
                s,
                r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{px_w}" height="{px_h}" viewBox="0 0 {px_w} {px_h}" shape-rendering="crispEdges">"#
            );
            for (k, [r, g, b]) in colors.iter().enumerate() {
                let (y, x) = ((k / width) * cell, (k % width) * cell);
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##
                );
            }
            s.push_str("</svg>\n");
            s.into_bytes()
        }
    })
}
