//! Image, mask and grid files.

use std::fs;
use std::path::{Path, PathBuf};

use contour_core::levelset::mask_boundary;
use contour_core::{Image, LevelSetGrid, RegionMask};
use image::{DynamicImage, GrayImage, Luma, Rgb, RgbImage};

use crate::error::{CliError, Result};

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];
const OUTLINE: Rgb<u8> = Rgb([0, 255, 0]);

fn open(path: &Path) -> Result<DynamicImage> {
    if !path.is_file() {
        return Err(CliError::MissingFile(path.to_path_buf()));
    }
    image::open(path).map_err(|e| CliError::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Loads a frame with values in [0, 1]: RGB for color files, one channel
/// otherwise. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<Image> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let image = if img.color().has_color() {
        let data = img.to_rgb32f().into_raw().into_iter().map(f64::from).collect();
        Image::new(w, h, 3, data)
    } else {
        let data = img.to_luma32f().into_raw().into_iter().map(f64::from).collect();
        Image::new(w, h, 1, data)
    };
    image.map_err(|e| CliError::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Loads a mask; luminance above 127 is inside.
pub fn load_mask(path: &Path) -> Result<RegionMask> {
    let gray = open(path)?.to_luma8();
    let (w, h) = gray.dimensions();
    let inside = gray.pixels().map(|p| p.0[0] > 127).collect();
    RegionMask::new(w as usize, h as usize, inside).map_err(|e| CliError::UnreadableImage {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn save(img: DynamicImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

/// Saves a one- or three-channel image as an 8-bit PNG.
pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_byte(v)).collect();
    let out = if img.channels() == 3 {
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer matches dimensions"))
    } else {
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer matches dimensions"))
    };
    save(out, path)
}

/// Saves a mask as a black and white PNG.
pub fn save_mask(mask: &RegionMask, path: &Path) -> Result<()> {
    let (w, h) = mask.dims();
    let mut out = GrayImage::new(w as u32, h as u32);
    for (i, &inside) in mask.as_slice().iter().enumerate() {
        out.put_pixel((i % w) as u32, (i / w) as u32, Luma([if inside { 255 } else { 0 }]));
    }
    save(DynamicImage::ImageLuma8(out), path)
}

/// The frame with the mask's boundary pixels painted green.
pub fn overlay(img: &Image, mask: &RegionMask) -> RgbImage {
    let (w, h) = img.dims();
    let mut out = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let p = img.pixel(x as usize, y as usize);
        match p {
            [r, g, b] => Rgb([to_byte(*r), to_byte(*g), to_byte(*b)]),
            _ => Rgb([to_byte(p[0]); 3]),
        }
    });
    for i in mask_boundary(mask) {
        out.put_pixel((i % w) as u32, (i / w) as u32, OUTLINE);
    }
    out
}

pub fn save_overlay(img: &Image, mask: &RegionMask, path: &Path) -> Result<()> {
    save(DynamicImage::ImageRgb8(overlay(img, mask)), path)
}

/// Raw dump: width and height as u32 little-endian, then the values as f32
/// little-endian in row-major order.
pub fn encode_grid(grid: &LevelSetGrid) -> Vec<u8> {
    let (w, h) = grid.dims();
    let mut bytes = Vec::with_capacity(8 + 4 * w * h);
    bytes.extend_from_slice(&(w as u32).to_le_bytes());
    bytes.extend_from_slice(&(h as u32).to_le_bytes());
    for &v in grid.values() {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    bytes
}

pub fn decode_grid(bytes: &[u8]) -> Option<LevelSetGrid> {
    let word = |k: usize| -> Option<[u8; 4]> { bytes.get(4 * k..4 * k + 4)?.try_into().ok() };
    let w = u32::from_le_bytes(word(0)?) as usize;
    let h = u32::from_le_bytes(word(1)?) as usize;
    if bytes.len() != 8 + 4 * w * h {
        return None;
    }
    let values = (0..w * h)
        .map(|k| word(2 + k).map(|b| f32::from_le_bytes(b) as f64))
        .collect::<Option<Vec<f64>>>()?;
    LevelSetGrid::new(w, h, values).ok()
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Expands a directory (its image files) or a glob pattern into a sorted
/// path list. A plain file path yields itself.
pub fn resolve_paths(input: &str) -> Result<Vec<PathBuf>> {
    let path = Path::new(input);
    let mut paths: Vec<PathBuf> = if path.is_dir() {
        fs::read_dir(path)
            .map_err(|_| CliError::MissingFile(path.to_path_buf()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect()
    } else if input.contains(['*', '?', '[']) {
        glob::glob(input)
            .map_err(|e| CliError::Usage(format!("bad glob '{input}': {e}")))?
            .filter_map(|p| p.ok())
            .filter(|p| p.is_file())
            .collect()
    } else if path.is_file() {
        vec![path.to_path_buf()]
    } else {
        return Err(CliError::MissingFile(path.to_path_buf()));
    };
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no image files match '{input}'")));
    }
    paths.sort();
    Ok(paths)
}
