//! Binary PPM (P6) and PGM (P5) reader and writer, maxval 255 only.
//!
//! Samples map to [0, 1] as v/255; the writer rounds v*255 to the nearest
//! integer, so round-trips are exact for 8-bit-representable data. '#'
//! comments are allowed in the header.

use super::{FormatError, Image};

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::ParseBytes { offset: self.pos, msg: msg.into() }
    }

    /// Next token, skipping whitespace and '#' comments.
    fn token(&mut self) -> Result<&'a str, FormatError> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| self.err("header is not valid ascii"))
    }
}

pub fn read_ppm(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let channels = match cur.token()? {
        "P6" => 3,
        "P5" => 1,
        "P2" | "P3" => {
            return Err(FormatError::Unsupported("ASCII PNM (P2/P3)".into()));
        }
        other => return Err(cur.err(format!("not a binary PNM header: {other:?}"))),
    };
    let width: usize = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad width {tok:?}")))?
    };
    let height: usize = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad height {tok:?}")))?
    };
    let maxval: u32 = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad maxval {tok:?}")))?
    };
    if maxval != 255 {
        return Err(FormatError::Unsupported(format!("maxval {maxval} (only 255)")));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(cur.err("expected whitespace before payload"));
    }
    cur.pos += 1;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| cur.err("dimension overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(FormatError::ParseBytes {
            offset: bytes.len(),
            msg: format!(
                "truncated payload: expected {expected} bytes, found {}",
                payload.len()
            ),
        });
    }
    let data = payload[..expected]
        .iter()
        .map(|b| *b as f32 / 255.0)
        .collect();
    Image::new(width, height, channels, data)
}

pub fn write_ppm(image: &Image) -> Vec<u8> {
    let magic = if image.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|v| (v * 255.0).round() as u8));
    out
}
