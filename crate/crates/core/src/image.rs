//! Raster primitives: SSIM/DSSIM, antialiased bilinear downscaling,
//! pixel-wise averaging, Gaussian input perturbation and a no-reference
//! blur index.
//!
//! Pixels are `f64` in `[0, 255]`, row-major and channel-interleaved.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("zero-sized image".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("{channels} channels (expected 1 or 3)")));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "{} pixel values for a {width}x{height}x{channels} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::InvalidImage(format!("pixel value {v} outside [0, 255]")));
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    fn shape(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// One channel as a dense row-major plane.
    fn plane(&self, c: usize) -> Vec<f64> {
        self.pixels.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Luma plane (ITU-R 601 weights) for colour images, the single plane otherwise.
    pub fn luma(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.pixels.clone();
        }
        self.pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    /// Clamped to `[0, 255]` and rounded to 8 bit.
    pub fn quantized(&self) -> Image {
        Image {
            pixels: self.pixels.iter().map(|v| v.clamp(0.0, 255.0).round()).collect(),
            ..*self
        }
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = ::image::open(path).map_err(|e| Error::Image {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        let (width, height) = (img.width() as usize, img.height() as usize);
        let (channels, raw) = if img.color().has_color() {
            (3, img.into_rgb8().into_raw())
        } else {
            (1, img.into_luma8().into_raw())
        };
        Self::new(width, height, channels, raw.into_iter().map(f64::from).collect())
    }

    /// Writes an 8-bit PNG; values are rounded.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.pixels.iter().map(|v| v.clamp(0.0, 255.0).round() as u8).collect();
        let color = if self.channels == 3 {
            ::image::ExtendedColorType::Rgb8
        } else {
            ::image::ExtendedColorType::L8
        };
        ::image::save_buffer(path, &bytes, self.width as u32, self.height as u32, color).map_err(|e| {
            Error::Image { path: path.to_owned(), message: e.to_string() }
        })
    }
}

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, dynamic_range: 255.0 }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let center = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable valid-mode filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let n = kernel.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&src[x..x + n]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel.iter().enumerate().map(|(i, k)| k * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], w: usize, h: usize, params: &SsimParams, kernel: &[f64]) -> f64 {
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let products = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, w, h, kernel);
    let mu_b = filter_valid(b, w, h, kernel);
    let aa = filter_valid(&products(|x, _| x * x), w, h, kernel);
    let bb = filter_valid(&products(|_, y| y * y), w, h, kernel);
    let ab = filter_valid(&products(|x, y| x * y), w, h, kernel);

    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = aa[i] - ma * ma;
            let var_b = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
        })
        .sum();
    total / mu_a.len() as f64
}

/// Mean SSIM over all fully-contained window positions, averaged over channels.
pub fn ssim_with(x: &Image, y: &Image, params: &SsimParams) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::ShapeMismatch(format!("{} vs {}", x.shape(), y.shape())));
    }
    if params.dynamic_range.is_nan()
        || params.dynamic_range <= 0.0
        || params.window == 0
        || params.sigma.is_nan()
        || params.sigma <= 0.0
    {
        return Err(Error::Domain("SSIM window and dynamic range must be positive".into()));
    }
    if x.width < params.window || x.height < params.window {
        return Err(Error::ImageTooSmall { width: x.width, height: x.height, needed: params.window });
    }
    let kernel = gaussian_kernel(params.window, params.sigma);
    let total: f64 = (0..x.channels)
        .map(|c| ssim_plane(&x.plane(c), &y.plane(c), x.width, x.height, params, &kernel))
        .sum();
    Ok(total / x.channels as f64)
}

pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    ssim_with(x, y, &SsimParams::default())
}

/// Structural dissimilarity `(1 - SSIM) / 2`.
pub fn dssim(x: &Image, y: &Image) -> Result<f64> {
    Ok((1.0 - ssim(x, y)?) / 2.0)
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

fn triangle(t: f64) -> f64 {
    (1.0 - t.abs()).max(0.0)
}

/// Reflects an out-of-range tap about the half-sample image border.
fn mirror(mut j: i64, len: usize) -> usize {
    let len = len as i64;
    loop {
        if j < 0 {
            j = -1 - j;
        } else if j >= len {
            j = 2 * len - 1 - j;
        } else {
            return j as usize;
        }
    }
}

/// Taps `(source index, weight)` for each output sample along one axis.
pub(crate) fn resample_weights(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = in_len as f64 / out_len as f64;
    let widen = scale.max(1.0);
    (0..out_len)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            let lo = (center - widen + 0.5).floor() as i64;
            let hi = (center + widen + 0.5).floor() as i64;
            let raw: Vec<(usize, f64)> = (lo..hi)
                .map(|j| (mirror(j, in_len), triangle((j as f64 + 0.5 - center) / widen)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let total: f64 = raw.iter().map(|(_, w)| w).sum();
            raw.into_iter().map(|(j, w)| (j, w / total)).collect()
        })
        .collect()
}

/// Bilinear downscaling with antialiasing: a triangle kernel whose support
/// is stretched by the inverse scale factor, weights normalized per output
/// pixel, borders mirrored. Applied separably, horizontal pass first.
pub fn downsample_bilinear_aa(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidImage("zero-sized output".into()));
    }
    if out_w > img.width || out_h > img.height {
        return Err(Error::Upscale { from_w: img.width, from_h: img.height, to_w: out_w, to_h: out_h });
    }
    let ch = img.channels;
    let wx = resample_weights(img.width, out_w);
    let wy = resample_weights(img.height, out_h);

    let mut horiz = vec![0.0; out_w * img.height * ch];
    for y in 0..img.height {
        for (ox, taps) in wx.iter().enumerate() {
            for c in 0..ch {
                horiz[(y * out_w + ox) * ch + c] = taps.iter().map(|&(x, w)| w * img.at(x, y, c)).sum();
            }
        }
    }
    let mut out = vec![0.0; out_w * out_h * ch];
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..out_w {
            for c in 0..ch {
                out[(oy * out_w + ox) * ch + c] =
                    taps.iter().map(|&(y, w)| w * horiz[(y * out_w + ox) * ch + c]).sum();
            }
        }
    }
    // convex combinations; clamp only guards rounding at the range ends
    out.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));
    Image::new(out_w, out_h, ch, out)
}

/// Pixel-wise arithmetic mean.
pub fn mean_image(images: &[Image]) -> Result<Image> {
    let first = images.first().ok_or(Error::EmptyList)?;
    let mut acc = vec![0.0; first.pixels.len()];
    for img in images {
        if !img.same_shape(first) {
            return Err(Error::ShapeMismatch(format!("{} vs {}", first.shape(), img.shape())));
        }
        acc.iter_mut().zip(&img.pixels).for_each(|(a, v)| *a += v);
    }
    let n = images.len() as f64;
    acc.iter_mut().for_each(|a| *a = (*a / n).clamp(0.0, 255.0));
    Image::new(first.width, first.height, first.channels, acc)
}

/// Adds `N(0, noise_scale^2)` noise per channel value, clips to
/// `[0, 255]` and rounds to 8 bit. `noise_scale` is a standard deviation.
pub fn perturb_gaussian(img: &Image, noise_scale: f64, seed: u64) -> Result<Image> {
    if !noise_scale.is_finite() || noise_scale < 0.0 {
        return Err(Error::Domain(format!("noise scale {noise_scale} must be finite and >= 0")));
    }
    if noise_scale == 0.0 {
        return Ok(img.quantized());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_scale).expect("finite positive std");
    let pixels = img
        .pixels
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 255.0).round())
        .collect();
    Ok(Image { pixels, ..*img })
}

/// Variance of the 4-neighbour Laplacian over the interior of the luma plane.
/// Larger means sharper.
pub fn blur_index(img: &Image) -> Result<f64> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall { width: w, height: h, needed: 3 });
    }
    let luma = img.luma();
    let response: Vec<f64> = (1..h - 1)
        .flat_map(|y| (1..w - 1).map(move |x| (x, y)))
        .map(|(x, y)| {
            let at = |x: usize, y: usize| luma[y * w + x];
            at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y)
        })
        .collect();
    let n = response.len() as f64;
    let mean = response.iter().sum::<f64>() / n;
    Ok(response.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n)
}
