use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{AugmentationError, Raster};
use crate::annotation::NormalizedAnnotation;
use crate::rng::SplitMix64;

/// Boxes keeping less than this fraction of their area after a crop are dropped.
pub const MIN_VISIBLE_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Mirrors pixels and annotations. Applying it twice is the identity.
pub fn flip(img: &Raster, anns: &[NormalizedAnnotation], axis: Axis) -> (Raster, Vec<NormalizedAnnotation>) {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = match axis {
                Axis::Horizontal => (w - 1 - x, y),
                Axis::Vertical => (x, h - 1 - y),
            };
            let i = (y * w + x) * c;
            let j = (sy * w + sx) * c;
            out.data_mut()[i..i + c].copy_from_slice(&img.data()[j..j + c]);
        }
    }
    let anns = anns
        .iter()
        .map(|a| {
            let (cx, cy) = match axis {
                Axis::Horizontal => (1.0 - a.cx(), a.cy()),
                Axis::Vertical => (a.cx(), 1.0 - a.cy()),
            };
            a.with_geometry(cx, cy, a.w(), a.h())
                .expect("reflection of a lattice annotation stays valid")
        })
        .collect();
    (out, anns)
}

/// Crops a `W/zoom x H/zoom` window and resamples it back to `W x H`.
///
/// `anchor` places the window: (0, 0) is the top-left corner of the valid
/// range, (1, 1) the bottom-right. Annotations are mapped into the window,
/// clipped, and dropped when less than [`MIN_VISIBLE_FRACTION`] of their
/// area remains.
pub fn crop_zoom(
    img: &Raster,
    anns: &[NormalizedAnnotation],
    zoom: f64,
    anchor: (f64, f64),
) -> Result<(Raster, Vec<NormalizedAnnotation>), AugmentationError> {
    if !(zoom.is_finite() && zoom >= 1.0) {
        return Err(AugmentationError::Parameter(format!("zoom must be >= 1, got {zoom}")));
    }
    let (ax, ay) = anchor;
    if !((0.0..=1.0).contains(&ax) && (0.0..=1.0).contains(&ay)) {
        return Err(AugmentationError::Parameter(format!("anchor ({ax}, {ay}) outside the unit square")));
    }
    if zoom == 1.0 {
        return Ok((img.clone(), anns.to_vec()));
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let (wf, hf) = (w as f64, h as f64);
    let (cw, ch) = (wf / zoom, hf / zoom);
    let (x0, y0) = (ax * (wf - cw), ay * (hf - ch));

    let mut data = Vec::with_capacity(w * h * c);
    let src = img.data();
    let xs: Vec<_> = (0..w).map(|i| bilinear_tap(x0 + (i as f64 + 0.5) / zoom - 0.5, w)).collect();
    for j in 0..h {
        let (y_lo, y_hi, ty) = bilinear_tap(y0 + (j as f64 + 0.5) / zoom - 0.5, h);
        for &(x_lo, x_hi, tx) in &xs {
            for k in 0..c {
                let s = |x: usize, y: usize| src[(y * w + x) * c + k] as f64;
                let top = s(x_lo, y_lo) * (1.0 - tx) + s(x_hi, y_lo) * tx;
                let bottom = s(x_lo, y_hi) * (1.0 - tx) + s(x_hi, y_hi) * tx;
                data.push(to_u8(top * (1.0 - ty) + bottom * ty));
            }
        }
    }
    let raster = Raster::new(w, h, c, data)?;

    // window in normalized image coordinates
    let (u0, v0) = (x0 / wf, y0 / hf);
    let (uw, vh) = (1.0 / zoom, 1.0 / zoom);
    let mut kept = Vec::with_capacity(anns.len());
    for a in anns {
        let [x1, y1, x2, y2] = a.normalized_corners();
        let original = (x2 - x1) * (y2 - y1);
        let nx1 = ((x1 - u0) / uw).clamp(0.0, 1.0);
        let nx2 = ((x2 - u0) / uw).clamp(0.0, 1.0);
        let ny1 = ((y1 - v0) / vh).clamp(0.0, 1.0);
        let ny2 = ((y2 - v0) / vh).clamp(0.0, 1.0);
        if nx2 <= nx1 || ny2 <= ny1 {
            continue;
        }
        let Ok(mapped) = a.with_geometry((nx1 + nx2) / 2.0, (ny1 + ny2) / 2.0, nx2 - nx1, ny2 - ny1) else {
            continue;
        };
        if visible_fraction(&mapped, original, zoom) >= MIN_VISIBLE_FRACTION {
            kept.push(mapped);
        }
    }
    Ok((raster, kept))
}

/// Area of a window-space annotation relative to its pre-crop area.
pub fn visible_fraction(mapped: &NormalizedAnnotation, original_area: f64, zoom: f64) -> f64 {
    mapped.w() * mapped.h() / (zoom * zoom) / original_area
}

#[inline]
fn bilinear_tap(pos: f64, len: usize) -> (usize, usize, f64) {
    let max = (len - 1) as f64;
    let p = pos.clamp(0.0, max);
    let lo = p.floor();
    let hi = (lo + 1.0).min(max);
    (lo as usize, hi as usize, p - lo)
}

#[inline]
fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Separable Gaussian blur with clamp-to-edge borders, per channel.
pub fn gaussian_blur(img: &Raster, sigma: f64) -> Result<Raster, AugmentationError> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(AugmentationError::Parameter(format!("sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let src = img.data();
    let clamp = |v: i64, len: usize| v.clamp(0, len as i64 - 1) as usize;

    let mut horizontal = vec![0.0f64; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for k in 0..c {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let sx = clamp(x as i64 + t as i64 - r, w);
                    acc += wt * src[(y * w + sx) * c + k] as f64;
                }
                horizontal[(y * w + x) * c + k] = acc;
            }
        }
    }
    let mut data = vec![0u8; w * h * c];
    for y in 0..h {
        for x in 0..w {
            for k in 0..c {
                let mut acc = 0.0;
                for (t, wt) in kernel.iter().enumerate() {
                    let sy = clamp(y as i64 + t as i64 - r, h);
                    acc += wt * horizontal[(sy * w + x) * c + k];
                }
                data[(y * w + x) * c + k] = to_u8(acc);
            }
        }
    }
    Raster::new(w, h, c, data)
}

/// `floor(fraction * W * H)`, tolerant of products like 0.0049 * 10^6 that
/// land a hair below an integer.
pub fn noise_pixel_count(fraction: f64, width: usize, height: usize) -> usize {
    let exact = fraction * width as f64 * height as f64;
    let n = exact.floor();
    let n = if exact - n > 1.0 - 1e-9 { n + 1.0 } else { n };
    n as usize
}

/// Salt-and-pepper noise on `floor(fraction * W * H)` distinct pixels.
///
/// Each chosen pixel becomes black or white across all channels with equal
/// odds. When the pixel already has the drawn value it takes the other one,
/// so exactly the computed number of pixels changes.
pub fn inject_noise(img: &Raster, fraction: f64, rng: &mut SplitMix64) -> Result<Raster, AugmentationError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(AugmentationError::Parameter(format!("noise fraction {fraction} outside [0, 1]")));
    }
    let n = img.pixel_count();
    let k = noise_pixel_count(fraction, img.width(), img.height()).min(n);
    let mut out = img.clone();
    let w = img.width();
    for idx in sample_distinct(n, k, rng) {
        let value = if rng.coin() { 255 } else { 0 };
        let px = out.pixel_mut(idx % w, idx / w);
        let value = if px.iter().all(|&v| v == value) { 255 - value } else { value };
        px.fill(value);
    }
    Ok(out)
}

/// Floyd's algorithm: `k` distinct indices from `0..n`, in draw order.
fn sample_distinct(n: usize, k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(k);
    let mut order = Vec::with_capacity(k);
    for j in (n - k)..n {
        let t = rng.below(j as u64 + 1) as usize;
        let pick = if seen.contains(&t) { j } else { t };
        seen.insert(pick);
        order.push(pick);
    }
    order
}
