//! Shared fixtures for the integration suites: synthetic PNG corpora and a
//! thin wrapper around the built binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use msce::image_io::save_png;
use msce_core::RgbImage;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// A piecewise-smooth test picture: shaded background, a few filled
/// rectangles and disks, and light noise. Every seed gives a different image.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let base: [f64; 3] = [rng.random_range(40.0..120.0), rng.random_range(40.0..120.0), rng.random_range(40.0..120.0)];
    let (gx, gy) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut px: Vec<[f64; 3]> = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            base.map(|b| b + gx * x + gy * y)
        })
        .collect();
    for _ in 0..rng.random_range(3..7) {
        let color: [f64; 3] = [rng.random_range(0.0..255.0), rng.random_range(0.0..255.0), rng.random_range(0.0..255.0)];
        let cx = rng.random_range(0.0..width as f64);
        let cy = rng.random_range(0.0..height as f64);
        let r = rng.random_range(4.0..width as f64 / 3.0);
        let disk = rng.random_bool(0.5);
        for (i, p) in px.iter_mut().enumerate() {
            let (dx, dy) = ((i % width) as f64 - cx, (i / width) as f64 - cy);
            let inside = if disk { dx * dx + dy * dy <= r * r } else { dx.abs() <= r && dy.abs() <= 0.6 * r };
            if inside {
                *p = color;
            }
        }
    }
    let pixels = px
        .into_iter()
        .map(|p| p.map(|c| (c + rng.random_range(-3.0..3.0)).round().clamp(0.0, 255.0) as u8))
        .collect();
    RgbImage::new(width, height, pixels).unwrap()
}

/// Write `count` synthetic images named `img00.png`, ... into `dir`.
pub fn write_corpus(dir: &Path, count: usize, size: (usize, usize), seed: u64) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let img = synthetic_image(size.0, size.1, seed.wrapping_mul(1000) + i as u64);
        save_png(&img, dir.join(format!("img{i:02}.png"))).unwrap();
    }
    dir.to_path_buf()
}

pub fn msce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msce")).args(args).env("RUST_LOG", "warn").output().expect("spawn msce")
}

/// Run and require exit status 0, returning stdout.
pub fn msce_ok(args: &[&str]) -> String {
    let out = msce(args);
    assert!(
        out.status.success(),
        "msce {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `key=value` fields of one log line.
pub fn fields(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace().filter_map(|t| t.split_once('=')).collect()
}

pub fn field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    fields(line).into_iter().find(|(k, _)| *k == key).map(|(_, v)| v)
}
