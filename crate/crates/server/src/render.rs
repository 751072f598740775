//! Slice rendering for the rater: 8-bit grayscale PNG, windowed to the 1st
//! and 99th intensity percentiles of the whole volume.

use alqa::{AlqaError, ImageVolume, Result};

/// Nearest-rank percentile of sorted values, `p` in [0, 1].
fn percentile(sorted: &[f32], p: f64) -> f64 {
    let k = (p * (sorted.len() - 1) as f64).round() as usize;
    f64::from(sorted[k])
}

/// (low, high) window of the volume.
pub fn volume_window(volume: &ImageVolume) -> (f64, f64) {
    let mut v: Vec<f32> = volume.voxels.iter().copied().collect();
    v.sort_by(f32::total_cmp);
    (percentile(&v, 0.01), percentile(&v, 0.99))
}

/// Maps intensities into 0..=255 inside the window; a window of zero width
/// gives uniform mid-gray.
pub fn window_slice(volume: &ImageVolume, slice: usize, window: (f64, f64)) -> Vec<u8> {
    let (lo, hi) = window;
    let view = volume.slice_view(slice);
    if hi - lo <= 0.0 {
        return vec![128; view.len()];
    }
    view.iter()
        .map(|&x| ((f64::from(x) - lo) / (hi - lo)).clamp(0.0, 1.0).mul_add(255.0, 0.5) as u8)
        .collect()
}

pub fn encode_png(pixels: &[u8], height: usize, width: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| AlqaError::Io(std::io::Error::other(e));
    let mut w = enc.write_header().map_err(png_err)?;
    w.write_image_data(pixels).map_err(png_err)?;
    w.finish().map_err(png_err)?;
    Ok(out)
}

/// PNG of one slice, or `None` when the index is out of range.
pub fn render_slice(volume: &ImageVolume, slice: usize) -> Result<Option<Vec<u8>>> {
    if slice >= volume.depth() {
        return Ok(None);
    }
    let (h, w) = volume.slice_shape();
    let pixels = window_slice(volume, slice, volume_window(volume));
    encode_png(&pixels, h, w).map(Some)
}
