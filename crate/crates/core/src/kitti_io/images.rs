//! PNG codecs for the raster layers exchanged between pipeline stages.
//!
//! | layer      | encoding                                         |
//! |------------|--------------------------------------------------|
//! | depth      | 16-bit gray, value × scale = meters (default cm) |
//! | intensity  | 16-bit gray, value / 65535                       |
//! | class / id | 8- or 16-bit gray, or raw palette indices        |
//! | mask       | 8-bit gray, 0 or 255                             |
//! | rgb        | 8-bit RGB (JPEG accepted on input)               |

use std::io::Cursor;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma, Rgb};

use crate::error::{Error, Result};
use crate::raster::{DepthImage, IdImage, IntensityImage, Mask, Raster, RgbImage};
use crate::scalar::Real;

/// Meters per stored unit in VKITTI-style depth PNGs (centimeters).
pub const DEPTH_CM: f64 = 0.01;

fn encode(img: DynamicImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

fn dims<P>(r: &Raster<P>) -> Result<(u32, u32)> {
    let cv = |n: usize| u32::try_from(n).map_err(|_| Error::Shape(format!("dimension {n} too large")));
    Ok((cv(r.width())?, cv(r.height())?))
}

fn luma16(r: &Raster<u16>) -> Result<Vec<u8>> {
    let (w, h) = dims(r)?;
    let img = ImageBuffer::<Luma<u16>, _>::from_raw(w, h, r.data().to_vec()).expect("size checked");
    encode(DynamicImage::ImageLuma16(img))
}

fn luma8(r: &Raster<u8>) -> Result<Vec<u8>> {
    let (w, h) = dims(r)?;
    let img = ImageBuffer::<Luma<u8>, _>::from_raw(w, h, r.data().to_vec()).expect("size checked");
    encode(DynamicImage::ImageLuma8(img))
}

pub fn load_depth_png<T: Real>(bytes: &[u8]) -> Result<DepthImage<T>> {
    load_depth_png_scaled(bytes, DEPTH_CM)
}

/// Decode a 16-bit single channel depth PNG; stored `0` stays invalid.
pub fn load_depth_png_scaled<T: Real>(bytes: &[u8], meters_per_unit: f64) -> Result<DepthImage<T>> {
    match image::load_from_memory_with_format(bytes, ImageFormat::Png)? {
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let data = img
                .into_raw()
                .into_iter()
                .map(|v| T::lit(v as f64 * meters_per_unit))
                .collect();
            Raster::from_vec(w as usize, h as usize, data)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "depth PNG must be 16-bit single channel, got {:?}",
            other.color()
        ))),
    }
}

/// Encode depth in meters as 16-bit units of `meters_per_unit`, saturating
/// at 65535.
pub fn encode_depth_png<T: Real>(depth: &DepthImage<T>, meters_per_unit: f64) -> Result<Vec<u8>> {
    luma16(&depth.map(|d| (d.as_f64() / meters_per_unit).round().clamp(0.0, 65535.0) as u16))
}

/// 16-bit (`/65535`) or 8-bit (`/255`) single channel intensity.
pub fn load_intensity_png<T: Real>(bytes: &[u8]) -> Result<IntensityImage<T>> {
    match image::load_from_memory(bytes)? {
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let data = img.into_raw().into_iter().map(|v| T::lit(v as f64 / 65535.0)).collect();
            Raster::from_vec(w as usize, h as usize, data)
        }
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let data = img.into_raw().into_iter().map(|v| T::lit(v as f64 / 255.0)).collect();
            Raster::from_vec(w as usize, h as usize, data)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "intensity PNG must be single channel, got {:?}",
            other.color()
        ))),
    }
}

pub fn encode_intensity_png<T: Real>(intensity: &IntensityImage<T>) -> Result<Vec<u8>> {
    luma16(&intensity.map(|v| (v.as_f64().clamp(0.0, 1.0) * 65535.0).round() as u16))
}

pub fn load_rgb(bytes: &[u8]) -> Result<RgbImage> {
    let img = image::load_from_memory(bytes)?.into_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    Raster::from_vec(w as usize, h as usize, data)
}

pub fn encode_rgb_png(rgb: &RgbImage) -> Result<Vec<u8>> {
    let (w, h) = dims(rgb)?;
    let raw: Vec<u8> = rgb.data().iter().flatten().copied().collect();
    let img = ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw).expect("size checked");
    encode(DynamicImage::ImageRgb8(img))
}

/// Read an identifier map from an 8/16-bit gray PNG or the raw indices of a
/// palette PNG. Color PNGs are rejected; use [`load_rgb`] for color-coded maps.
pub fn load_id_png(bytes: &[u8]) -> Result<IdImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::UnsupportedFormat(format!("png: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::UnsupportedFormat(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let bits = info.bit_depth as usize;
    match info.color_type {
        png::ColorType::Grayscale | png::ColorType::Indexed => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "id map must be gray or indexed, got {other:?}"
            )))
        }
    }
    let mut data = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        match bits {
            16 => data.extend(row.chunks_exact(2).take(w).map(|b| u16::from_be_bytes([b[0], b[1]]))),
            8 => data.extend(row.iter().take(w).map(|&v| v as u16)),
            1 | 2 | 4 => {
                let per_byte = 8 / bits;
                let mask = (1u16 << bits) - 1;
                data.extend((0..w).map(|x| {
                    let byte = row[x / per_byte] as u16;
                    let shift = 8 - bits * (x % per_byte + 1);
                    (byte >> shift) & mask
                }));
            }
            _ => return Err(Error::UnsupportedFormat(format!("bit depth {bits}"))),
        }
    }
    Raster::from_vec(w, h, data)
}

/// 8-bit gray id map; errors if any id exceeds 255.
pub fn encode_id_png8(ids: &IdImage) -> Result<Vec<u8>> {
    if let Some(v) = ids.data().iter().find(|v| **v > 255) {
        return Err(Error::UnsupportedFormat(format!("id {v} does not fit 8 bits")));
    }
    luma8(&ids.map(|v| *v as u8))
}

pub fn encode_id_png16(ids: &IdImage) -> Result<Vec<u8>> {
    luma16(ids)
}

pub fn encode_mask_png(mask: &Mask) -> Result<Vec<u8>> {
    luma8(&mask.map(|m| if *m { 255 } else { 0 }))
}

/// Any nonzero value is `true`.
pub fn load_mask_png(bytes: &[u8]) -> Result<Mask> {
    Ok(load_id_png(bytes)?.map(|v| *v != 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn depth_png(w: u32, h: u32, values: Vec<u16>) -> Vec<u8> {
        let img = ImageBuffer::<Luma<u16>, _>::from_raw(w, h, values).unwrap();
        encode(DynamicImage::ImageLuma16(img)).unwrap()
    }

    #[test]
    fn depth_unit_conversion() {
        let d: DepthImage<f64> = load_depth_png(&depth_png(1, 1, vec![100])).unwrap();
        assert_eq!(d.data(), &[1.0]);
        let d: DepthImage<f64> = load_depth_png(&depth_png(1, 1, vec![0])).unwrap();
        assert_eq!(d.data(), &[0.0]);
    }

    #[test]
    fn depth_conversion_table() {
        let d: DepthImage<f64> = load_depth_png(&depth_png(2, 2, vec![100, 200, 300, 65535])).unwrap();
        let expected = [1.0, 2.0, 3.0, 655.35];
        for (a, b) in d.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn depth_rejects_8bit_and_rgb() {
        let g8 = luma8(&Raster::filled(2, 2, 3u8)).unwrap();
        assert!(matches!(load_depth_png::<f32>(&g8), Err(Error::UnsupportedFormat(_))));
        let rgb = encode_rgb_png(&Raster::filled(2, 2, [1, 2, 3])).unwrap();
        assert!(matches!(load_depth_png::<f32>(&rgb), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn depth_encode_round_trip() {
        let d = Raster::from_vec(2, 1, vec![12.34f64, 0.0]).unwrap();
        let back: DepthImage<f64> = load_depth_png(&encode_depth_png(&d, DEPTH_CM).unwrap()).unwrap();
        assert!((back[(0, 0)] - 12.34).abs() < 1e-9);
        assert_eq!(back[(0, 1)], 0.0);
    }

    #[test]
    fn ids_and_masks() {
        let ids = Raster::from_vec(3, 1, vec![0u16, 7, 300]).unwrap();
        assert_eq!(load_id_png(&encode_id_png16(&ids).unwrap()).unwrap(), ids);
        assert!(encode_id_png8(&ids).is_err());
        let small = ids.map(|v| v % 256);
        assert_eq!(load_id_png(&encode_id_png8(&small).unwrap()).unwrap(), small);
        let m = Raster::from_vec(2, 1, vec![true, false]).unwrap();
        assert_eq!(load_mask_png(&encode_mask_png(&m).unwrap()).unwrap(), m);
    }

    #[test]
    fn palette_indices_are_raw() {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 4, 1);
            enc.set_color(png::ColorType::Indexed);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_palette(vec![0u8; 3 * 8]);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 5, 7, 2]).unwrap();
        }
        assert_eq!(load_id_png(&out).unwrap().data(), &[0, 5, 7, 2]);
    }

    #[test]
    fn intensity_quantization() {
        let i = Raster::from_vec(3, 1, vec![0.0f64, 0.5, 1.0]).unwrap();
        let back: IntensityImage<f64> = load_intensity_png(&encode_intensity_png(&i).unwrap()).unwrap();
        assert_eq!(back[(0, 0)], 0.0);
        assert!((back[(0, 1)] - 0.5).abs() < 1.0 / 65535.0);
        assert_eq!(back[(0, 2)], 1.0);
    }

    #[test]
    fn rgb_round_trip() {
        let rgb = Raster::from_fn(3, 2, |r, c| [r as u8, c as u8, 9]);
        assert_eq!(load_rgb(&encode_rgb_png(&rgb).unwrap()).unwrap(), rgb);
    }
}
