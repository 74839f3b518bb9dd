//! `cam.txt`: `extrinsic` + 4×4 world-to-camera matrix, `intrinsic` + 3×3,
//! then an optional `depth_min depth_interval [num_planes depth_max]` line.

use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix4};

use super::FormatError;
use crate::error::Result;
use crate::geometry::Camera;
use crate::scalar::Scalar;

/// Rotation residual above which a parsed camera triggers a warning.
const ORTHONORMAL_WARN: f64 = 1e-6;

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Cam { line, msg: msg.into() }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            if !line.trim().is_empty() {
                return Some((i + 1, line.trim()));
            }
        }
        None
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), FormatError> {
        match self.next_content() {
            Some((_, l)) if l == word => Ok(()),
            Some((n, l)) => Err(err(n, format!("expected `{word}`, found `{l}`"))),
            None => Err(err(self.last + 1, format!("missing `{word}` section"))),
        }
    }

    fn row<T: Scalar>(&mut self, count: usize, what: &str) -> Result<Vec<T>, FormatError> {
        let (n, line) = self.next_content().ok_or_else(|| err(self.last + 1, format!("missing {what} row")))?;
        let values = parse_numbers::<T>(n, line)?;
        if values.len() != count {
            return Err(err(n, format!("{what} row needs {count} values, found {}", values.len())));
        }
        Ok(values)
    }
}

fn parse_numbers<T: Scalar>(line_no: usize, line: &str) -> Result<Vec<T>, FormatError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| err(line_no, format!("bad number `{tok}`")))
        })
        .collect()
}

pub fn read_cam<T: Scalar>(text: &str) -> Result<Camera<T>> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
        last: 0,
    };
    lines.expect_keyword("extrinsic")?;
    let mut e = Matrix4::zeros();
    for r in 0..4 {
        for (c, v) in lines.row::<T>(4, "extrinsic")?.into_iter().enumerate() {
            e[(r, c)] = v;
        }
    }
    lines.expect_keyword("intrinsic")?;
    let mut k = Matrix3::zeros();
    for r in 0..3 {
        for (c, v) in lines.row::<T>(3, "intrinsic")?.into_iter().enumerate() {
            k[(r, c)] = v;
        }
    }
    let (mut cam, residual) = Camera::new_lenient(k, e)?;
    if residual.to_f64_lossy() > ORTHONORMAL_WARN {
        log::warn!("cam: rotation deviates from orthonormal by {residual}");
    }
    if let Some((n, line)) = lines.next_content() {
        let vals = parse_numbers::<T>(n, line)?;
        match vals.len() {
            2 | 4 => {
                cam.depth_min = Some(vals[0]);
                cam.depth_interval = Some(vals[1]);
                if vals.len() == 4 {
                    let planes = vals[2].to_f64_lossy();
                    if planes < 0.0 || planes.fract() != 0.0 {
                        return Err(err(n, format!("plane count `{planes}` is not a whole number")).into());
                    }
                    cam.num_planes = Some(planes as usize);
                    cam.depth_max = Some(vals[3]);
                }
            }
            c => return Err(err(n, format!("depth line needs 2 or 4 values, found {c}")).into()),
        }
        if let Some(d) = cam.depth_min {
            if !(d > T::zero()) {
                return Err(err(n, "depth_min must be positive").into());
            }
        }
    }
    if let Some((n, _)) = lines.next_content() {
        return Err(err(n, "unexpected trailing content").into());
    }
    Ok(cam)
}

pub fn write_cam<T: Scalar>(cam: &Camera<T>) -> String {
    let mut s = String::from("extrinsic\n");
    let e = cam.extrinsics();
    for r in 0..4 {
        let _ = writeln!(s, "{} {} {} {}", e[(r, 0)], e[(r, 1)], e[(r, 2)], e[(r, 3)]);
    }
    s.push_str("\nintrinsic\n");
    let k = cam.intrinsics();
    for r in 0..3 {
        let _ = writeln!(s, "{} {} {}", k[(r, 0)], k[(r, 1)], k[(r, 2)]);
    }
    if let (Some(min), Some(interval)) = (cam.depth_min, cam.depth_interval) {
        s.push('\n');
        match (cam.num_planes, cam.depth_max) {
            (Some(n), Some(max)) => {
                let _ = writeln!(s, "{min} {interval} {n} {max}");
            }
            _ => {
                let _ = writeln!(s, "{min} {interval}");
            }
        }
    }
    s
}
