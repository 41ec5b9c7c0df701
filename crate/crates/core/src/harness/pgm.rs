//! Binary greyscale PGM (`P5`, maxval 255) sample sheets.

use std::path::Path;

use super::eval::HistogramBox;
use super::{io_err, HarnessError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreyImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GreyImage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(io_err(path))
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Tiles `rows × cols` square images of side `side`, taken row-major from
/// `samples` (one flattened image per row, values in `[0, 1]`).
pub fn image_grid(samples: &Tensor, rows: usize, cols: usize, side: usize) -> Result<GreyImage> {
    let (n, d) = samples.dims2("image_grid")?;
    if d != side * side || n < rows * cols {
        return Err(HarnessError::Config(format!(
            "{n} samples of width {d} cannot fill a {rows}×{cols} grid of {side}×{side} tiles"
        )));
    }
    let (width, height) = (cols * side, rows * side);
    let mut pixels = vec![0u8; width * height];
    for r in 0..rows {
        for c in 0..cols {
            let img = samples.row(r * cols + c);
            for y in 0..side {
                let dst = (r * side + y) * width + c * side;
                for (p, &v) in pixels[dst..dst + side].iter_mut().zip(&img[y * side..(y + 1) * side]) {
                    *p = to_byte(v);
                }
            }
        }
    }
    Ok(GreyImage { width, height, pixels })
}

/// One density panel per requested class, side by side, each a
/// `window.bins`-square histogram of the class's 2-D samples scaled to its
/// own peak. The top image row is the largest `y`.
pub fn density_grid(points: &Tensor, requested: &[usize], n_classes: usize, window: HistogramBox) -> Result<GreyImage> {
    let (n, d) = points.dims2("density_grid")?;
    if d != 2 || n != requested.len() {
        return Err(HarnessError::Config(format!("density grid needs [n × 2] points, got [{n} × {d}]")));
    }
    let b = window.bins;
    let mut counts = vec![vec![0u64; window.cells()]; n_classes];
    for (i, &r) in requested.iter().enumerate() {
        let p = points.row(i);
        counts[r][window.cell(p[0], p[1])] += 1;
    }
    let (width, height) = (n_classes * b, b);
    let mut pixels = vec![0u8; width * height];
    for (k, hist) in counts.iter().enumerate() {
        let peak = hist.iter().copied().max().unwrap_or(0).max(1) as f64;
        for y in 0..b {
            for x in 0..b {
                let v = hist[y * b + x] as f64 / peak;
                pixels[(b - 1 - y) * width + k * b + x] = to_byte(v);
            }
        }
    }
    Ok(GreyImage { width, height, pixels })
}
