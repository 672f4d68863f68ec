//! Raster resizing: nearest neighbor for identifier maps, area averaging for
//! continuous layers.

use crate::raster::{DepthImage, Raster, RgbImage};
use crate::scalar::Real;

/// Source index sampled by destination index `i` when mapping `src` cells
/// onto `dst` cells by pixel centers.
#[inline]
pub fn nearest_index(i: usize, src: usize, dst: usize) -> usize {
    (((2 * i + 1) * src) / (2 * dst)).min(src - 1)
}

pub fn resize_nearest<P: Clone>(src: &Raster<P>, width: usize, height: usize) -> Raster<P> {
    if src.dims() == (width, height) {
        return src.clone();
    }
    Raster::from_fn(width, height, |r, c| {
        src[(
            nearest_index(r, src.height(), height),
            nearest_index(c, src.width(), width),
        )]
        .clone()
    })
}

/// For each destination index, the source indices it covers with their
/// overlap lengths (in source pixel units).
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let mut w = Vec::new();
            let mut s = lo.floor() as usize;
            while (s as f64) < hi && s < src {
                let overlap = hi.min(s as f64 + 1.0) - lo.max(s as f64);
                if overlap > 1e-12 {
                    w.push((s, overlap));
                }
                s += 1;
            }
            w
        })
        .collect()
}

/// Area-weighted average of each destination cell's footprint, rounded to
/// the nearest 8-bit value.
pub fn resize_area_rgb(src: &RgbImage, width: usize, height: usize) -> RgbImage {
    if src.dims() == (width, height) {
        return src.clone();
    }
    let wx = area_weights(src.width(), width);
    let wy = area_weights(src.height(), height);
    Raster::from_fn(width, height, |r, c| {
        let mut acc = [0.0f64; 3];
        let mut total = 0.0;
        for &(sy, fy) in &wy[r] {
            for &(sx, fx) in &wx[c] {
                let w = fy * fx;
                let p = src[(sy, sx)];
                for k in 0..3 {
                    acc[k] += w * p[k] as f64;
                }
                total += w;
            }
        }
        acc.map(|v| (v / total).round().clamp(0.0, 255.0) as u8)
    })
}

/// Area-weighted average over the valid (nonzero) source depths only; a
/// destination cell with no valid source stays 0.
pub fn resize_area_depth<T: Real>(src: &DepthImage<T>, width: usize, height: usize) -> DepthImage<T> {
    if src.dims() == (width, height) {
        return src.clone();
    }
    let wx = area_weights(src.width(), width);
    let wy = area_weights(src.height(), height);
    Raster::from_fn(width, height, |r, c| {
        let mut acc = 0.0;
        let mut total = 0.0;
        for &(sy, fy) in &wy[r] {
            for &(sx, fx) in &wx[c] {
                let d = src[(sy, sx)].as_f64();
                if d > 0.0 {
                    acc += fy * fx * d;
                    total += fy * fx;
                }
            }
        }
        if total > 0.0 {
            T::lit(acc / total)
        } else {
            T::zero()
        }
    })
}
