//! 16-bit millimeter depth rasters aligned with the color image.
//!
//! On disk a frame is either a binary PGM (`P5`, maxval 65535, big-endian
//! samples) or a 16-bit grayscale PNG. Zero marks an invalid measurement.

use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Luma};

use crate::error::DepthIoError;

pub const INVALID_DEPTH: u16 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: u32,
    height: u32,
    values: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, values: Vec<u16>) -> Result<Self, DepthIoError> {
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(DepthIoError::Size { expected, found: values.len() });
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: u32, height: u32, mm: u16) -> Self {
        Self { width, height, values: vec![mm; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    /// Raw millimeter value, `None` outside the frame.
    pub fn get(&self, x: i64, y: i64) -> Option<u16> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.values[y as usize * self.width as usize + x as usize])
    }

    pub fn set(&mut self, x: u32, y: u32, mm: u16) {
        let w = self.width as usize;
        self.values[y as usize * w + x as usize] = mm;
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.values.len() * 2);
        for v in &self.values {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, DepthIoError> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(DepthIoError::Format("not a binary PGM (P5) file".into()));
        }
        let width = parse_header_number(next_token(bytes, &mut pos)?)?;
        let height = parse_header_number(next_token(bytes, &mut pos)?)?;
        let maxval = parse_header_number(next_token(bytes, &mut pos)?)?;
        if maxval != 65535 {
            return Err(DepthIoError::Format(format!("expected maxval 65535, got {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(DepthIoError::Format("missing whitespace after header".into()));
        }
        pos += 1;
        let count = width as usize * height as usize;
        let data = &bytes[pos..];
        if data.len() < count * 2 {
            return Err(DepthIoError::Size { expected: count, found: data.len() / 2 });
        }
        let values = data[..count * 2].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Self::new(width, height, values)
    }

    pub fn to_png(&self) -> Result<Vec<u8>, DepthIoError> {
        let img: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(self.width, self.height, self.values.clone())
                .ok_or_else(|| DepthIoError::Format("raster size mismatch".into()))?;
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, DepthIoError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
        match img {
            image::DynamicImage::ImageLuma16(buf) => {
                let (w, h) = buf.dimensions();
                Self::new(w, h, buf.into_raw())
            }
            other => Err(DepthIoError::Format(format!(
                "expected 16-bit grayscale PNG, got {:?}",
                other.color()
            ))),
        }
    }

    /// Loads `.pgm` or `.png` depending on the file extension.
    pub fn load(path: &Path) -> Result<Self, DepthIoError> {
        let bytes = std::fs::read(path)?;
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => Self::from_png(&bytes),
            Some("pgm") => Self::from_pgm(&bytes),
            _ => Err(DepthIoError::Format(format!("unsupported depth file {}", path.display()))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), DepthIoError> {
        let bytes = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => self.to_png()?,
            _ => self.to_pgm(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], DepthIoError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(DepthIoError::Format("truncated PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_header_number(token: &[u8]) -> Result<u32, DepthIoError> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse::<u32>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| DepthIoError::Format(format!("bad header value {:?}", String::from_utf8_lossy(token))))
}
