//! PFM depth-map reader and writer.
//!
//! Grayscale ("Pf") maps only. The scale line's sign encodes endianness
//! (negative = little-endian); its magnitude is ignored, as is conventional.
//! Scanlines are stored bottom-to-top. The writer always emits little-endian
//! with scale -1.0, so read(write(d)) is bit-exact for finite data.

use super::{DepthMap, FormatError};

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::ParseBytes { offset: self.pos, msg: msg.into() }
    }

    /// Next whitespace-delimited token.
    fn token(&mut self) -> Result<&'a str, FormatError> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
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

    /// Consumes the single whitespace byte separating header from payload.
    fn skip_one_whitespace(&mut self) -> Result<(), FormatError> {
        if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err("expected whitespace before payload"))
        }
    }
}

pub fn read_pfm(bytes: &[u8]) -> Result<DepthMap, FormatError> {
    let mut cur = ByteCursor::new(bytes);
    match cur.token()? {
        "Pf" => {}
        "PF" => return Err(FormatError::Unsupported("color PFM (\"PF\")".into())),
        other => return Err(cur.err(format!("not a PFM header: {other:?}"))),
    }
    let width: usize = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad width {tok:?}")))?
    };
    let height: usize = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad height {tok:?}")))?
    };
    let scale: f32 = {
        let tok = cur.token()?;
        tok.parse().map_err(|_| cur.err(format!("bad scale {tok:?}")))?
    };
    cur.skip_one_whitespace()?;
    let little_endian = scale < 0.0;

    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("dimension overflow"))?;
    let payload_len = count
        .checked_mul(4)
        .ok_or_else(|| cur.err("dimension overflow"))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < payload_len {
        return Err(FormatError::ParseBytes {
            offset: bytes.len(),
            msg: format!(
                "truncated payload: expected {payload_len} bytes, found {}",
                payload.len()
            ),
        });
    }

    // Bottom-to-top scanlines.
    let mut data = vec![0.0f32; count];
    for stored_row in 0..height {
        let image_row = height - 1 - stored_row;
        for x in 0..width {
            let off = (stored_row * width + x) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().expect("bounds checked");
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[image_row * width + x] = v;
        }
    }
    DepthMap::new(width, height, data)
}

pub fn write_pfm(depth: &DepthMap) -> Result<Vec<u8>, FormatError> {
    if let Some(bad) = depth.data().iter().find(|v| !v.is_finite()) {
        return Err(FormatError::InvalidRaster(format!(
            "cannot write nonfinite depth entry {bad}"
        )));
    }
    let (w, h) = (depth.width(), depth.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for stored_row in 0..h {
        let image_row = h - 1 - stored_row;
        for x in 0..w {
            out.extend_from_slice(&depth.get(x, image_row).to_le_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2x2() {
        let d = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = write_pfm(&d).unwrap();
        assert_eq!(read_pfm(&bytes).unwrap(), d);
    }

    #[test]
    fn big_endian_twin_reads_the_same() {
        let values = [0.5f32, -1.25, 3.75, 1e-3, 42.0, 0.0];
        let (w, h) = (3, 2);
        let mut le = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
        let mut be = format!("Pf\n{w} {h}\n1.0\n").into_bytes();
        for stored_row in 0..h {
            let image_row = h - 1 - stored_row;
            for x in 0..w {
                let v = values[image_row * w + x];
                le.extend_from_slice(&v.to_le_bytes());
                be.extend_from_slice(&v.to_be_bytes());
            }
        }
        let from_le = read_pfm(&le).unwrap();
        let from_be = read_pfm(&be).unwrap();
        assert_eq!(from_le, from_be);
        assert_eq!(from_le.data(), &values);
    }

    #[test]
    fn color_header_unsupported() {
        let bytes = b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0";
        assert!(matches!(
            read_pfm(bytes),
            Err(FormatError::Unsupported(_))
        ));
    }

    #[test]
    fn nonfinite_write_rejected() {
        let d = DepthMap::new(1, 1, vec![f32::INFINITY]).unwrap();
        assert!(write_pfm(&d).is_err());
        let d = DepthMap::new(1, 1, vec![f32::NAN]).unwrap();
        assert!(write_pfm(&d).is_err());
    }

    #[test]
    fn truncation_is_an_error_with_offset() {
        let d = DepthMap::new(4, 4, vec![1.0; 16]).unwrap();
        let bytes = write_pfm(&d).unwrap();
        let truncated = &bytes[..bytes.len() - 5];
        match read_pfm(truncated) {
            Err(FormatError::ParseBytes { offset, .. }) => assert_eq!(offset, truncated.len()),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_overflow_rejected() {
        let bytes = format!("Pf\n{} {}\n-1.0\n", usize::MAX, 2).into_bytes();
        assert!(read_pfm(&bytes).is_err());
    }
}
