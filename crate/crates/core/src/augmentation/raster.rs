use std::path::Path;

use super::AugmentationError;

/// Row-major 8-bit image with one (gray) or three (RGB) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, AugmentationError> {
        if channels != 1 && channels != 3 {
            return Err(AugmentationError::Raster(format!("unsupported channel count {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(AugmentationError::Raster(format!("empty raster {width}x{height}")));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(AugmentationError::Raster(format!(
                "expected {expected} samples for {width}x{height}x{channels}, found {}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, AugmentationError> {
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Number of pixel positions where any channel differs.
    pub fn count_changed_pixels(&self, other: &Raster) -> usize {
        assert_eq!(
            (self.width, self.height, self.channels),
            (other.width, other.height, other.channels),
            "raster shapes differ"
        );
        self.data
            .chunks_exact(self.channels)
            .zip(other.data.chunks_exact(other.channels))
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Binary PGM (`P5`) for one channel, PPM (`P6`) for three.
    pub fn to_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pnm(bytes: &[u8]) -> Result<Self, AugmentationError> {
        let mut cur = HeaderCursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let channels = match magic {
            b"P5" => 1,
            b"P6" => 3,
            other => {
                return Err(AugmentationError::Pnm(format!(
                    "unsupported magic `{}` (only binary P5/P6)",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cur.number("width")?;
        let height = cur.number("height")?;
        let maxval = cur.number("maxval")?;
        if maxval != 255 {
            return Err(AugmentationError::Pnm(format!("maxval {maxval} unsupported, expected 255")));
        }
        // exactly one whitespace byte separates the header from the samples
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(AugmentationError::Pnm("missing whitespace after maxval".into())),
        }
        let expected = width * height * channels;
        let body = &bytes[cur.pos..];
        if body.len() < expected {
            return Err(AugmentationError::Pnm(format!(
                "truncated pixel data: {} of {expected} bytes",
                body.len()
            )));
        }
        Self::new(width, height, channels, body[..expected].to_vec())
    }

    pub fn read(path: &Path) -> Result<Self, AugmentationError> {
        Self::from_pnm(&std::fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), AugmentationError> {
        std::fs::write(path, self.to_pnm())?;
        Ok(())
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], AugmentationError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(AugmentationError::Pnm("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, AugmentationError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| AugmentationError::Pnm(format!("bad {what} `{}`", String::from_utf8_lossy(tok))))
    }
}
