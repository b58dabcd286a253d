//! 8-bit PNG reading and writing.

use std::fs;
use std::io::{BufWriter, Cursor};
use std::path::{Path, PathBuf};

use msce_core::image::quantize;
use msce_core::{Plane, Real, RgbImage};

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("{}: no such file", .0.display())]
    Missing(PathBuf),
    #[error("{}: malformed PNG: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },
    #[error("{}: unsupported bit depth {depth} (only 8-bit and lower are read)", path.display())]
    UnsupportedBitDepth { path: PathBuf, depth: u8 },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: PNG encoding failed: {reason}", path.display())]
    Encode { path: PathBuf, reason: String },
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, ImageError> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ImageError::Missing(path.to_owned()),
        _ => ImageError::Io { path: path.to_owned(), source: e },
    })
}

/// Decode a PNG to RGB. Grey is replicated to three channels, palettes are
/// expanded and alpha is dropped with a warning.
pub fn load_png(path: impl AsRef<Path>) -> Result<RgbImage, ImageError> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let malformed = |e: png::DecodingError| ImageError::Malformed { path: path.to_owned(), reason: e.to_string() };
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(malformed)?;
    let depth = reader.info().bit_depth;
    if depth == png::BitDepth::Sixteen {
        return Err(ImageError::UnsupportedBitDepth { path: path.to_owned(), depth: 16 });
    }
    let size = reader.output_buffer_size().ok_or_else(|| ImageError::Malformed {
        path: path.to_owned(),
        reason: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(malformed)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let (color, _) = reader.output_color_type();
    let channels = color.samples();
    if matches!(color, png::ColorType::GrayscaleAlpha | png::ColorType::Rgba) {
        log::warn!("{}: alpha channel ignored", path.display());
    }
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * info.line_size..y * info.line_size + w * channels];
        for px in row.chunks_exact(channels) {
            pixels.push(match color {
                png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => [px[0]; 3],
                _ => [px[0], px[1], px[2]],
            });
        }
    }
    RgbImage::new(w, h, pixels).map_err(|e| ImageError::Malformed { path: path.to_owned(), reason: e.to_string() })
}

fn write_png(path: &Path, w: usize, h: usize, color: png::ColorType, data: &[u8]) -> Result<(), ImageError> {
    let file = fs::File::create(path).map_err(|e| ImageError::Io { path: path.to_owned(), source: e })?;
    let encode = |e: png::EncodingError| ImageError::Encode { path: path.to_owned(), reason: e.to_string() };
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header().map_err(encode)?;
    writer.write_image_data(data).map_err(encode)?;
    writer.finish().map_err(encode)
}

pub fn save_png(img: &RgbImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let data: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    write_png(path.as_ref(), img.width(), img.height(), png::ColorType::Rgb, &data)
}

/// Single-channel 8-bit PNG; values are clamped and rounded half up.
pub fn save_gray_png<T: Real>(plane: &Plane<T>, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let data: Vec<u8> = plane.data().iter().map(|v| quantize(v.as_f64())).collect();
    write_png(path.as_ref(), plane.width(), plane.height(), png::ColorType::Grayscale, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let pixels = (0..16 * 16).map(|i| [(i % 256) as u8, (i * 7 % 256) as u8, (255 - i % 256) as u8]).collect();
        let img = RgbImage::new(16, 16, pixels).unwrap();
        save_png(&img, &p).unwrap();
        assert_eq!(load_png(&p).unwrap(), img);
    }

    #[test]
    fn black_pixel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.png");
        save_png(&RgbImage::new(1, 1, vec![[0, 0, 0]]).unwrap(), &p).unwrap();
        assert_eq!(load_png(&p).unwrap().pixels(), &[[0, 0, 0]]);
    }

    #[test]
    fn grey_is_replicated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        save_gray_png(&Plane::<f32>::from_fn(3, 2, |x, y| (x + 3 * y) as f32 / 5.0), &p).unwrap();
        let img = load_png(&p).unwrap();
        assert_eq!(img.pixel(1, 1), [204, 204, 204]);
    }

    #[test]
    fn error_categories() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_png(dir.path().join("none.png")), Err(ImageError::Missing(_))));

        let p = dir.path().join("t.png");
        save_png(&RgbImage::new(8, 8, vec![[9, 9, 9]; 64]).unwrap(), &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_png(&p), Err(ImageError::Malformed { .. })));

        let q = dir.path().join("d.png");
        let file = fs::File::create(&q).unwrap();
        let mut enc = png::Encoder::new(file, 2, 2);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        enc.write_header().unwrap().write_image_data(&[0u8; 8]).unwrap();
        assert!(matches!(load_png(&q), Err(ImageError::UnsupportedBitDepth { depth: 16, .. })));
    }

    #[test]
    fn alpha_is_stripped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let file = fs::File::create(&p).unwrap();
        let mut enc = png::Encoder::new(file, 1, 2);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.write_header().unwrap().write_image_data(&[1, 2, 3, 0, 4, 5, 6, 255]).unwrap();
        assert_eq!(load_png(&p).unwrap().pixels(), &[[1, 2, 3], [4, 5, 6]]);
    }
}
