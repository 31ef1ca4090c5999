//! 8-bit image files (PNG, binary PPM/PGM) to and from [`ImageTensor`].

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, GrayImage, ImageEncoder, ImageFormat, RgbImage};
use nalgebra::DMatrix;

use super::ImageTensor;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Format implied by a file extension; only PNG and PNM are accepted.
pub fn format_for_path(path: &Path) -> Result<ImageFormat> {
    match ImageFormat::from_path(path) {
        Ok(f @ (ImageFormat::Png | ImageFormat::Pnm)) => Ok(f),
        _ => Err(Error::InvalidInput(format!(
            "unsupported image extension for {} (use .png, .ppm or .pgm)",
            path.display()
        ))),
    }
}

fn from_rgb(rgb: &RgbImage) -> Result<ImageTensor> {
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut data = vec![0.0; h * w * 3];
    for (x, y, px) in rgb.enumerate_pixels() {
        let r = y as usize * w + x as usize;
        for k in 0..3 {
            data[k * h * w + r] = f64::from(px[k]) / 255.0;
        }
    }
    Ok(ImageTensor::new(Tensor3::new(h, w, 3, data)?))
}

/// Decodes any supported image to RGB with values in `[0, 1]`.
pub fn decode_image(bytes: &[u8]) -> Result<ImageTensor> {
    from_rgb(&image::load_from_memory(bytes)?.to_rgb8())
}

pub fn load_image(path: &Path) -> Result<ImageTensor> {
    from_rgb(&image::open(path)?.to_rgb8())
}

fn quantize(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode(img: DynamicImage, format: ImageFormat) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    if format == ImageFormat::Pnm {
        // The default PNM encoder emits PAM; force P6 / P5.
        let subtype = match img {
            DynamicImage::ImageLuma8(_) => PnmSubtype::Graymap(SampleEncoding::Binary),
            _ => PnmSubtype::Pixmap(SampleEncoding::Binary),
        };
        PnmEncoder::new(&mut out).with_subtype(subtype).write_image(
            img.as_bytes(),
            img.width(),
            img.height(),
            img.color().into(),
        )?;
    } else {
        img.write_to(&mut out, format)?;
    }
    Ok(out.into_inner())
}

/// Clamps to `[0, 1]` and writes 8-bit RGB. Requires 3 channels.
pub fn encode_rgb(img: &ImageTensor, format: ImageFormat) -> Result<Vec<u8>> {
    if img.channels() != 3 {
        return Err(Error::WrongChannelCount {
            expected: 3,
            found: img.channels(),
        });
    }
    let (h, w) = (img.height(), img.width());
    let buf = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let r = y as usize * w + x as usize;
        image::Rgb([0, 1, 2].map(|k| quantize(img.channel(k)[r])))
    });
    encode(DynamicImage::ImageRgb8(buf), format)
}

/// Clamps to `[0, 1]` and writes 8-bit grayscale.
pub fn encode_gray(plane: &DMatrix<f64>, format: ImageFormat) -> Result<Vec<u8>> {
    let buf = GrayImage::from_fn(plane.ncols() as u32, plane.nrows() as u32, |x, y| {
        image::Luma([quantize(plane[(y as usize, x as usize)])])
    });
    encode(DynamicImage::ImageLuma8(buf), format)
}
