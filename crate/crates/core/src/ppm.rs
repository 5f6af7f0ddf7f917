//! Portable PixMap (PPM) reading and writing.
//!
//! Only the 8-bit RGB variants are handled: `P3` (ASCII) and `P6` (binary),
//! both with maxval 255. Header comments start with `#` and run to the end of
//! the line. See <https://netpbm.sourceforge.net/doc/ppm.html>.

use thiserror::Error;

use crate::color::SrgbColor;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PpmError {
    #[error("unsupported format {magic:?} at byte 0 (expected P3 or P6)")]
    UnsupportedFormat { magic: String },
    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: usize, reason: String },
    #[error("unsupported maxval {maxval} at byte {offset} (only 255 is accepted)")]
    MaxVal { offset: usize, maxval: u32 },
    #[error("truncated pixel data at byte {offset}: expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid sample at byte {offset}: {reason}")]
    Sample { offset: usize, reason: String },
    #[error("grid dimensions must be at least 1x1 and match the pixel count")]
    Dimensions,
}

/// Row-major RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    pixels: Vec<SrgbColor>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<SrgbColor>) -> Result<Self, PpmError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(PpmError::Dimensions);
        }
        Ok(Self { width, height, pixels })
    }

    /// A grid filled with a single colour.
    pub fn filled(width: usize, height: usize, c: SrgbColor) -> Result<Self, PpmError> {
        Self::new(width, height, vec![c; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[SrgbColor] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Option<SrgbColor> {
        (x < self.width && y < self.height).then(|| self.pixels[y * self.width + x])
    }

    pub fn set(&mut self, x: usize, y: usize, c: SrgbColor) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        self.pixels[y * self.width + x] = c;
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token; returns (value, start offset).
    fn header_uint(&mut self, what: &str) -> Result<(u32, usize), PpmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PpmError::Header {
                offset: start,
                reason: format!("expected {what}"),
            });
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let value = text.parse::<u32>().map_err(|_| PpmError::Header {
            offset: start,
            reason: format!("{what} {text} is too large"),
        })?;
        Ok((value, start))
    }
}

pub fn parse_ppm(bytes: &[u8]) -> Result<PixelGrid, PpmError> {
    let magic = bytes.get(..2).unwrap_or(bytes);
    let binary = match magic {
        b"P3" => false,
        b"P6" => true,
        _ => {
            return Err(PpmError::UnsupportedFormat {
                magic: String::from_utf8_lossy(magic).into_owned(),
            })
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PpmError::Header {
            offset: 2,
            reason: "expected whitespace after magic number".into(),
        });
    }

    let (width, w_off) = cur.header_uint("width")?;
    let (height, h_off) = cur.header_uint("height")?;
    if width == 0 {
        return Err(PpmError::Header {
            offset: w_off,
            reason: "width must be positive".into(),
        });
    }
    if height == 0 {
        return Err(PpmError::Header {
            offset: h_off,
            reason: "height must be positive".into(),
        });
    }
    let (maxval, m_off) = cur.header_uint("maxval")?;
    if maxval != 255 {
        return Err(PpmError::MaxVal { offset: m_off, maxval });
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| PpmError::Header {
            offset: w_off,
            reason: "image dimensions overflow".into(),
        })?;

    let samples = if binary {
        // Exactly one whitespace byte separates maxval from the raster.
        match cur.bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(PpmError::Header {
                    offset: cur.pos,
                    reason: "expected a single whitespace byte before raster".into(),
                })
            }
        }
        let raster = &bytes[cur.pos..];
        if raster.len() < expected {
            return Err(PpmError::Truncated {
                offset: bytes.len(),
                expected,
                found: raster.len(),
            });
        }
        raster[..expected].to_vec()
    } else {
        let mut samples = Vec::with_capacity(expected);
        while samples.len() < expected {
            cur.skip_whitespace_and_comments();
            if cur.pos >= bytes.len() {
                return Err(PpmError::Truncated {
                    offset: bytes.len(),
                    expected,
                    found: samples.len(),
                });
            }
            let start = cur.pos;
            while cur.bytes.get(cur.pos).is_some_and(u8::is_ascii_digit) {
                cur.pos += 1;
            }
            if start == cur.pos {
                return Err(PpmError::Sample {
                    offset: start,
                    reason: format!("unexpected byte 0x{:02x}", bytes[start]),
                });
            }
            let text = std::str::from_utf8(&bytes[start..cur.pos]).expect("ascii digits");
            let v = text
                .parse::<u32>()
                .ok()
                .filter(|v| *v <= 255)
                .ok_or_else(|| PpmError::Sample {
                    offset: start,
                    reason: format!("sample {text} exceeds maxval 255"),
                })?;
            samples.push(v as u8);
        }
        samples
    };

    let pixels = samples
        .chunks_exact(3)
        .map(|c| SrgbColor::new(c[0], c[1], c[2]))
        .collect();
    PixelGrid::new(width, height, pixels)
}

pub fn encode_p3(grid: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P3\n{} {}\n255\n", grid.width, grid.height);
    for row in grid.pixels.chunks(grid.width) {
        let line: Vec<String> = row.iter().map(|p| format!("{} {} {}", p.r, p.g, p.b)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn encode_p6(grid: &PixelGrid) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.reserve(grid.pixels.len() * 3);
    for p in &grid.pixels {
        out.extend_from_slice(&[p.r, p.g, p.b]);
    }
    out
}
