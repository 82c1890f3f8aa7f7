//! Decoding to 8-bit gray rasters and linearization into pixel sequences.
//!
//! Color sources are reduced with the BT.601 integer luma
//! `round(0.299 R + 0.587 G + 0.114 B)`. Sources with more than 8 bits per
//! channel are rejected.

use std::fmt;
use std::path::Path;

use image::DynamicImage;

use crate::{Error, Result};

/// Decoded 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidGrid(format!(
                "{width}x{height} grid needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    /// Builds a grid from nested rows, all of the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::InvalidGrid("ragged rows".into()));
        }
        let values = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(width, rows.len(), values)
    }

    pub fn filled(width: usize, height: usize, level: u8) -> Result<Self> {
        Self::new(width, height, vec![level; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    pub fn into_values(self) -> Vec<u8> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Traversal {
    /// Even rows left-to-right, odd rows right-to-left (row 0 is left-to-right).
    Boustrophedon,
    RowMajor,
}

impl Traversal {
    pub fn name(self) -> &'static str {
        match self {
            Traversal::Boustrophedon => "boustrophedon",
            Traversal::RowMajor => "rowmajor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "boustrophedon" => Ok(Traversal::Boustrophedon),
            "rowmajor" => Ok(Traversal::RowMajor),
            other => Err(Error::InvalidArgument(format!("unknown traversal `{other}`"))),
        }
    }
}

impl fmt::Display for Traversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A grid flattened into one stream. Consecutive values are treated as
/// neighbors, including across row seams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSequence {
    values: Vec<u8>,
    traversal: Traversal,
    source_width: usize,
    source_height: usize,
}

impl PixelSequence {
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn traversal(&self) -> Traversal {
        self.traversal
    }

    pub fn source_width(&self) -> usize {
        self.source_width
    }

    pub fn source_height(&self) -> usize {
        self.source_height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn boustrophedon(grid: &PixelGrid) -> PixelSequence {
    let mut values = Vec::with_capacity(grid.pixel_count());
    for y in 0..grid.height() {
        let row = grid.row(y);
        if y % 2 == 0 {
            values.extend_from_slice(row);
        } else {
            values.extend(row.iter().rev());
        }
    }
    PixelSequence {
        values,
        traversal: Traversal::Boustrophedon,
        source_width: grid.width(),
        source_height: grid.height(),
    }
}

pub fn row_major(grid: &PixelGrid) -> PixelSequence {
    PixelSequence {
        values: grid.values().to_vec(),
        traversal: Traversal::RowMajor,
        source_width: grid.width(),
        source_height: grid.height(),
    }
}

pub fn linearize(grid: &PixelGrid, traversal: Traversal) -> PixelSequence {
    match traversal {
        Traversal::Boustrophedon => boustrophedon(grid),
        Traversal::RowMajor => row_major(grid),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pgm,
    Bmp,
}

impl ImageFormat {
    /// Guesses the format from the leading magic bytes.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            Some(ImageFormat::Png)
        } else if bytes.starts_with(b"P5") {
            Some(ImageFormat::Pgm)
        } else if bytes.starts_with(b"BM") {
            Some(ImageFormat::Bmp)
        } else {
            None
        }
    }

    pub fn from_extension(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(ImageFormat::Png),
            "pgm" => Some(ImageFormat::Pgm),
            "bmp" => Some(ImageFormat::Bmp),
            _ => None,
        }
    }
}

/// BT.601 luma with round-half-up, in exact integer arithmetic.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

pub fn decode_grayscale(bytes: &[u8], format: ImageFormat) -> Result<PixelGrid> {
    match format {
        ImageFormat::Pgm => decode_pgm(bytes),
        ImageFormat::Png => decode_with_image(bytes, image::ImageFormat::Png),
        ImageFormat::Bmp => decode_with_image(bytes, image::ImageFormat::Bmp),
    }
}

/// Decodes by magic bytes, falling back to the file extension.
pub fn decode_auto(bytes: &[u8], path: Option<&Path>) -> Result<PixelGrid> {
    let format = ImageFormat::sniff(bytes)
        .or_else(|| path.and_then(ImageFormat::from_extension))
        .ok_or_else(|| Error::MalformedFile("unrecognized image format".into()))?;
    decode_grayscale(bytes, format)
}

fn decode_with_image(bytes: &[u8], format: image::ImageFormat) -> Result<PixelGrid> {
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let values: Vec<u8> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => {
            buf.pixels().map(|p| luma(p.0[0], p.0[1], p.0[2])).collect()
        }
        other => {
            return Err(Error::UnsupportedBitDepth(format!(
                "{:?} channels are not 8-bit",
                other.color()
            )))
        }
    };
    PixelGrid::new(width, height, values)
}

fn decode_pgm(bytes: &[u8]) -> Result<PixelGrid> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::MalformedFile("not a binary PGM (P5)".into()));
    }
    let width = parse_header_number(bytes, &mut pos, "width")?;
    let height = parse_header_number(bytes, &mut pos, "height")?;
    let maxval = parse_header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedFile(format!("invalid maxval {maxval}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(format!(
            "PGM maxval {maxval}, only 255 is accepted"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedFile("missing raster separator".into())),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedFile("dimensions overflow".into()))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or_else(|| Error::MalformedFile(format!("raster truncated, expected {n} bytes")))?;
    PixelGrid::new(width, height, raster.to_vec()).map_err(|e| Error::MalformedFile(e.to_string()))
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(Error::MalformedFile("truncated PGM header".into())),
        }
    }
    let start = *pos;
    while matches!(bytes.get(*pos), Some(b) if !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

fn parse_header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedFile(format!("bad PGM {what}")))
}

/// Encodes a grid as binary PGM (P5, maxval 255).
pub fn encode_pgm(grid: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend_from_slice(grid.values());
    out
}

pub fn read_grid(path: &Path) -> std::result::Result<PixelGrid, ReadError> {
    let bytes = std::fs::read(path).map_err(ReadError::Io)?;
    decode_auto(&bytes, Some(path)).map_err(ReadError::Decode)
}

/// Failure to load an image from disk, split so callers can tell I/O from decoding.
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(std::io::Error),
    #[error(transparent)]
    Decode(Error),
}
