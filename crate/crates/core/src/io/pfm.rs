//! Portable float map (single channel `Pf` only).
//!
//! Rows are stored bottom-up. The sign of the scale line gives the byte
//! order (negative: little-endian) and its magnitude scales the values.

use super::FormatError;
use crate::error::Result;
use crate::grid::{DepthMap, Grid};
use crate::scalar::Scalar;

/// Single-channel float image, rows top-down in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

fn err(offset: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Pfm { offset, msg: msg.into() }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Result<(usize, &'a str), FormatError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(err(start, "unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map(|s| (start, s))
            .map_err(|_| err(start, "header is not ASCII"))
    }
}

pub fn read_pfm(bytes: &[u8]) -> Result<PfmImage, FormatError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (at, magic) = cur.token()?;
    match magic {
        "Pf" => {}
        "PF" => return Err(FormatError::ColorUnsupported),
        other => return Err(err(at, format!("bad magic `{other}`"))),
    }
    let mut dim = |name: &str| -> Result<usize, FormatError> {
        let (at, tok) = cur.token()?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(err(at, format!("bad {name} `{tok}`"))),
        }
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let (at, tok) = cur.token()?;
    let scale: f32 = tok.parse().map_err(|_| err(at, format!("bad scale `{tok}`")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(err(at, "scale must be non-zero and finite"));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(err(cur.pos, "missing newline after scale")),
    }
    let start = cur.pos;
    let needed = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| err(start, "dimensions overflow"))?;
    let payload = &bytes[start..];
    if payload.len() < needed {
        return Err(err(bytes.len(), format!("truncated payload: {} of {needed} bytes", payload.len())));
    }
    if payload.len() > needed {
        return Err(err(start + needed, format!("{} trailing bytes after payload", payload.len() - needed)));
    }
    let little = scale < 0.0;
    let magnitude = scale.abs();
    let mut data = vec![0f32; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let mut v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        if magnitude != 1.0 {
            v *= magnitude;
        }
        let (row, col) = (i / width, i % width);
        data[(height - 1 - row) * width + col] = v;
    }
    Ok(PfmImage { width, height, data })
}

/// Little-endian encoding with scale `-1.0`.
pub fn write_pfm(img: &PfmImage) -> Vec<u8> {
    let header = format!("Pf\n{} {}\n-1.0\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in (0..img.height).rev() {
        for v in &img.data[row * img.width..(row + 1) * img.width] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

impl PfmImage {
    pub fn from_grid<T: Scalar>(g: &Grid<T>) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            data: g.as_slice().iter().map(|v| v.to_f32_lossy()).collect(),
        }
    }

    pub fn to_grid<T: Scalar>(&self) -> Result<Grid<T>> {
        Grid::from_vec(self.width, self.height, self.data.iter().map(|&v| T::lit(f64::from(v))).collect())
    }

    /// Depth map view; non-finite samples become invalid (0).
    pub fn to_depth<T: Scalar>(&self) -> Result<DepthMap<T>> {
        DepthMap::from_vec(self.width, self.height, self.data.iter().map(|&v| T::lit(f64::from(v))).collect())
    }
}

pub fn read_depth_pfm<T: Scalar>(bytes: &[u8]) -> Result<DepthMap<T>> {
    read_pfm(bytes)?.to_depth()
}

pub fn write_depth_pfm<T: Scalar>(d: &DepthMap<T>) -> Vec<u8> {
    write_pfm(&PfmImage::from_grid(d.grid()))
}

pub fn write_grid_pfm<T: Scalar>(g: &Grid<T>) -> Vec<u8> {
    write_pfm(&PfmImage::from_grid(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_roundtrip() {
        let img = PfmImage {
            width: 2,
            height: 2,
            data: vec![1.0, 2.5, -3.0, 4.125],
        };
        let bytes = write_pfm(&img);
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
        assert_eq!(read_pfm(&bytes).unwrap(), img);
    }

    #[test]
    fn big_endian_payload() {
        // bottom row first: [3, 4] then [1, 2]
        let mut bytes = b"Pf\n2 2\n1.0\n".to_vec();
        for v in [3.0f32, 4.0, 1.0, 2.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let img = read_pfm(&bytes).unwrap();
        assert_eq!(img.data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn scale_magnitude_applied() {
        let mut bytes = b"Pf\n1 1\n-2.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_le_bytes());
        assert_eq!(read_pfm(&bytes).unwrap().data, vec![3.0]);
    }

    #[test]
    fn colour_rejected() {
        assert_eq!(read_pfm(b"PF\n1 1\n-1.0\n000000000000"), Err(FormatError::ColorUnsupported));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_pfm(b"P5\n1 1\n-1.0\n0000"), Err(FormatError::Pfm { offset: 0, .. })));
        assert!(matches!(read_pfm(b"Pf\n1 x\n-1.0\n0000"), Err(FormatError::Pfm { offset: 5, .. })));
        assert!(matches!(read_pfm(b"Pf\n1 1\n0\n0000"), Err(FormatError::Pfm { .. })));
        assert!(matches!(read_pfm(b"Pf\n2 1\n-1.0\n0000"), Err(FormatError::Pfm { .. })));
        let trailing = read_pfm(b"Pf\n1 1\n-1.0\n0000extra").unwrap_err();
        assert_eq!(
            trailing,
            FormatError::Pfm {
                offset: 16,
                msg: "5 trailing bytes after payload".into()
            }
        );
    }

    #[test]
    fn depth_view_normalises_non_finite() {
        let img = PfmImage {
            width: 2,
            height: 1,
            data: vec![f32::INFINITY, 2.0],
        };
        let d: DepthMap<f64> = img.to_depth().unwrap();
        assert_eq!(d.values(), &[0.0, 2.0]);
    }

    proptest! {
        #[test]
        fn write_read_identity(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let data: Vec<f32> = (0..w * h).map(|i| f32::from_bits((seed as u32).wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0x7f7f_ffff)).collect();
            let img = PfmImage { width: w, height: h, data };
            let bytes = write_pfm(&img);
            let back = read_pfm(&bytes).unwrap();
            prop_assert_eq!(write_pfm(&back), bytes);
            prop_assert_eq!(back, img);
        }
    }
}
