//! PLY point clouds. Writes binary little-endian `float x y z` with optional
//! `uchar red green blue`; reads ASCII and both binary encodings, taking
//! positions (and colours when present) from the `vertex` element and
//! skipping any other element.

use nalgebra::Point3;

use super::FormatError;
use crate::cloud::PointCloud;
use crate::scalar::Scalar;

pub fn write_ply<T: Scalar>(cloud: &PointCloud<T>) -> Vec<u8> {
    let colors = cloud.colors.as_ref().filter(|c| c.len() == cloud.points.len());
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n",
        cloud.points.len()
    );
    if colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");
    let stride = if colors.is_some() { 15 } else { 12 };
    let mut out = Vec::with_capacity(header.len() + stride * cloud.points.len());
    out.extend_from_slice(header.as_bytes());
    for (i, p) in cloud.points.iter().enumerate() {
        for v in p.iter() {
            out.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
        }
        if let Some(c) = colors {
            out.extend_from_slice(&c[i]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], little: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut raw = [0u8; $n];
                raw.copy_from_slice(&b[..$n]);
                (if little { <$t>::from_le_bytes(raw) } else { <$t>::from_be_bytes(raw) }) as f64
            }};
        }
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => num!(i16, 2),
            Self::U16 => num!(u16, 2),
            Self::I32 => num!(i32, 4),
            Self::U32 => num!(u32, 4),
            Self::F32 => num!(f32, 4),
            Self::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn header_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::PlyHeader { line, msg: msg.into() }
}

fn body_err(offset: usize, msg: impl Into<String>) -> FormatError {
    FormatError::PlyBody { offset, msg: msg.into() }
}

/// Parses the header, returning encoding, elements and the payload offset.
fn parse_header(bytes: &[u8]) -> Result<(Encoding, Vec<Element>, usize), FormatError> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| header_err(line_no + 1, "header not terminated by end_header"))?;
        line_no += 1;
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| header_err(line_no, "header is not ASCII"))?
            .trim_end_matches('\r');
        pos = end + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "missing `ply` magic"));
            }
            continue;
        }
        match toks.as_slice() {
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(header_err(line_no, format!("unknown format `{other}`"))),
                })
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| header_err(line_no, format!("bad element count `{count}`")))?,
                props: Vec::new(),
            }),
            ["property", "list", count, item, _name] => {
                let count = ScalarType::parse(count).ok_or_else(|| header_err(line_no, format!("unknown type `{count}`")))?;
                let item = ScalarType::parse(item).ok_or_else(|| header_err(line_no, format!("unknown type `{item}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?
                    .props
                    .push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let ty = ScalarType::parse(ty).ok_or_else(|| header_err(line_no, format!("unknown type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?
                    .props
                    .push(Property::Scalar { name: name.to_string(), ty });
            }
            ["end_header"] => break,
            _ => return Err(header_err(line_no, format!("unrecognised header line `{line}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok((encoding, elements, pos))
}

/// Sequential reader over the element payload.
struct Body<'a> {
    bytes: &'a [u8],
    pos: usize,
    encoding: Encoding,
}

impl Body<'_> {
    fn value(&mut self, ty: ScalarType) -> Result<f64, FormatError> {
        match self.encoding {
            Encoding::Ascii => {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                    self.pos += 1;
                }
                let start = self.pos;
                while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Err(body_err(start, "unexpected end of data"));
                }
                std::str::from_utf8(&self.bytes[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| body_err(start, "bad ascii value"))
            }
            Encoding::BinaryLe | Encoding::BinaryBe => {
                let n = ty.size();
                if self.pos + n > self.bytes.len() {
                    return Err(body_err(self.bytes.len(), "truncated binary payload"));
                }
                let v = ty.decode(&self.bytes[self.pos..], self.encoding == Encoding::BinaryLe);
                self.pos += n;
                Ok(v)
            }
        }
    }

    fn finish(mut self) -> Result<(), FormatError> {
        if self.encoding == Encoding::Ascii {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }
        if self.pos < self.bytes.len() {
            return Err(body_err(self.pos, format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

pub fn read_ply<T: Scalar>(bytes: &[u8]) -> Result<PointCloud<T>, FormatError> {
    let (encoding, elements, start) = parse_header(bytes)?;
    let vertex = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| header_err(1, "no vertex element"))?;
    let find = |name: &str| {
        elements[vertex]
            .props
            .iter()
            .position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))
    };
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(header_err(1, "vertex element lacks x/y/z")),
    };
    let rgb = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };

    let mut body = Body { bytes, pos: start, encoding };
    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut row = Vec::new();
    for (ei, element) in elements.iter().enumerate() {
        for _ in 0..element.count {
            row.clear();
            for prop in &element.props {
                match *prop {
                    Property::Scalar { ty, .. } => row.push(body.value(ty)?),
                    Property::List { count, item } => {
                        let at = body.pos;
                        let n = body.value(count)?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err(body_err(at, "bad list length"));
                        }
                        for _ in 0..n as usize {
                            body.value(item)?;
                        }
                        row.push(f64::NAN);
                    }
                }
            }
            if ei == vertex {
                let p = Point3::new(T::lit(row[ix]), T::lit(row[iy]), T::lit(row[iz]));
                if p.iter().any(|v| !v.is_finite_value()) {
                    return Err(body_err(body.pos, format!("vertex {} is not finite", points.len())));
                }
                points.push(p);
                if let Some([r, g, b]) = rgb {
                    colors.push([row[r] as u8, row[g] as u8, row[b] as u8]);
                }
            }
        }
    }
    body.finish()?;
    Ok(PointCloud {
        points,
        colors: rgb.map(|_| colors),
        confidence: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cloud_is_header_only() {
        let bytes = write_ply(&PointCloud::<f64>::new(vec![]));
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.ends_with("end_header\n"));
        assert!(text.contains("element vertex 0\n"));
        assert!(read_ply::<f64>(&bytes).unwrap().is_empty());
    }

    #[test]
    fn colour_adds_three_uchar_properties() {
        let mut cloud = PointCloud::new(vec![Point3::new(1.0f64, -2.0, 3.5)]);
        assert!(!String::from_utf8_lossy(&write_ply(&cloud)).contains("uchar"));
        cloud.colors = Some(vec![[10, 20, 30]]);
        let bytes = write_ply(&cloud);
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("property uchar red\nproperty uchar green\nproperty uchar blue\n"));
        let back: PointCloud<f64> = read_ply(&bytes).unwrap();
        assert_eq!(back.points, cloud.points);
        assert_eq!(back.colors, cloud.colors);
    }

    #[test]
    fn ascii_with_faces() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nproperty float nx\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 1\n1 0 0 1\n0 1 0.5 1\n3 0 1 2\n";
        let cloud: PointCloud<f64> = read_ply(text.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.points[2], Point3::new(0.0, 1.0, 0.5));
        assert!(cloud.colors.is_none());
    }

    #[test]
    fn big_endian_body() {
        let mut bytes = b"ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        for v in [1.5f32, 2.0, -4.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let cloud: PointCloud<f32> = read_ply(&bytes).unwrap();
        assert_eq!(cloud.points[0], Point3::new(1.5, 2.0, -4.0));
    }

    #[test]
    fn trailing_and_truncated_rejected() {
        let cloud = PointCloud::new(vec![Point3::new(1.0f64, 2.0, 3.0)]);
        let bytes = write_ply(&cloud);
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(read_ply::<f64>(&extra), Err(FormatError::PlyBody { .. })));
        assert!(matches!(read_ply::<f64>(&bytes[..bytes.len() - 1]), Err(FormatError::PlyBody { .. })));
        assert!(matches!(read_ply::<f64>(b"plx\n"), Err(FormatError::PlyHeader { line: 1, .. })));
        assert!(matches!(
            read_ply::<f64>(b"ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nend_header\n"),
            Err(FormatError::PlyHeader { .. })
        ));
    }
}
