//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use gcmvs::{Camera, DepthMap};
use nalgebra::{Matrix4, Point3, Vector4};

/// 4x4 homogeneous intrinsics with the analytic inverse of an upper
/// triangular pinhole matrix.
fn intrinsics4(cam: &Camera<f64>) -> (Matrix4<f64>, Matrix4<f64>) {
    let k = cam.intrinsics();
    let (fx, s, cx, fy, cy) = (k[(0, 0)], k[(0, 1)], k[(0, 2)], k[(1, 1)], k[(1, 2)]);
    let mut k4 = Matrix4::identity();
    k4[(0, 0)] = fx;
    k4[(0, 1)] = s;
    k4[(0, 2)] = cx;
    k4[(1, 1)] = fy;
    k4[(1, 2)] = cy;
    let mut inv = Matrix4::identity();
    inv[(0, 0)] = 1.0 / fx;
    inv[(0, 1)] = -s / (fx * fy);
    inv[(0, 2)] = (s * cy - cx * fy) / (fx * fy);
    inv[(1, 1)] = 1.0 / fy;
    inv[(1, 2)] = -cy / fy;
    (k4, inv)
}

/// Inverse of a rigid world-to-camera matrix: `[Rᵀ | -Rᵀt]`.
fn rigid_inverse(e: &Matrix4<f64>) -> Matrix4<f64> {
    let r = e.fixed_view::<3, 3>(0, 0).transpose();
    let t = e.fixed_view::<3, 1>(0, 3).into_owned();
    let mut inv = Matrix4::identity();
    inv.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    inv.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-(r * t)));
    inv
}

/// Pixel `(x, y)` at depth `d` in `from`, carried to `to` through
/// `K_to · E_to · E_from⁻¹ · K_from⁻¹`. Returns `(x, y, depth)` in `to`.
pub fn transfer(from: &Camera<f64>, to: &Camera<f64>, x: f64, y: f64, d: f64) -> Option<(f64, f64, f64)> {
    if d <= 0.0 {
        return None;
    }
    let (_, k_from_inv) = intrinsics4(from);
    let (k_to, _) = intrinsics4(to);
    let chain = k_to * to.extrinsics() * rigid_inverse(from.extrinsics()) * k_from_inv;
    let h = chain * Vector4::new(x * d, y * d, d, 1.0);
    if h.z <= 0.0 {
        return None;
    }
    Some((h.x / h.z, h.y / h.z, h.z))
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 * r.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// Bilinear / nearest sampling over pixel centres; any neighbour that
/// contributes weight must hold a valid depth.
pub fn sample(d: &DepthMap<f64>, x: f64, y: f64, nearest: bool) -> Option<f64> {
    let (x, y) = (snap(x), snap(y));
    let (w, h) = d.dims();
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let valid = |v: f64| v > 0.0 && v.is_finite();
    if nearest {
        let v = d.value(x.round() as usize, y.round() as usize);
        return valid(v).then_some(v);
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (ax, ay) = (x - x0 as f64, y - y0 as f64);
    let mut total = 0.0;
    for (xi, wx) in [(x0, 1.0 - ax), (x0 + 1, ax)] {
        for (yi, wy) in [(y0, 1.0 - ay), (y0 + 1, ay)] {
            let wgt = wx * wy;
            if wgt == 0.0 {
                continue;
            }
            let v = d.value(xi, yi);
            if !valid(v) {
                return None;
            }
            total += wgt * v;
        }
    }
    Some(total)
}

/// Brute-force forward-backward reprojection, one pixel at a time.
pub fn fbr_bruteforce(
    ref_depth: &DepthMap<f64>,
    ref_cam: &Camera<f64>,
    src_depth: &DepthMap<f64>,
    src_cam: &Camera<f64>,
    nearest: bool,
) -> Vec<Option<(f64, f64, f64)>> {
    let (w, h) = ref_depth.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let d0 = ref_depth.value(x, y);
            let r = (d0 > 0.0)
                .then(|| transfer(ref_cam, src_cam, x as f64, y as f64, d0))
                .flatten()
                .and_then(|(sx, sy, _)| {
                    let ds = sample(src_depth, sx, sy, nearest)?;
                    transfer(src_cam, ref_cam, sx, sy, ds)
                });
            out.push(r);
        }
    }
    out
}

/// `(pde, rdd)` from a brute-force FBR entry.
pub fn errors(x: usize, y: usize, d0: f64, r: (f64, f64, f64)) -> (f64, f64) {
    let (dx, dy) = (r.0 - x as f64, r.1 - y as f64);
    ((dx * dx + dy * dy).sqrt(), (r.2 - d0).abs() / d0)
}

pub fn nearest_distance(points: &[Point3<f64>], q: &Point3<f64>) -> f64 {
    points.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min)
}

/// Mean nearest-neighbour distance of `from` into `to`, excluding
/// distances above `max_dist`.
pub fn mean_nn(from: &[Point3<f64>], to: &[Point3<f64>], max_dist: f64) -> Option<f64> {
    let kept: Vec<f64> = from.iter().map(|q| nearest_distance(to, q)).filter(|&d| d <= max_dist).collect();
    (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Minimal reader for the binary little-endian layout the writer emits:
/// float x/y/z with optional uchar red/green/blue.
pub fn read_simple_ply(bytes: &[u8]) -> (Vec<[f32; 3]>, Option<Vec<[u8; 3]>>) {
    let marker = b"end_header\n";
    let end = bytes.windows(marker.len()).position(|w| w == marker).expect("header end") + marker.len();
    let header = std::str::from_utf8(&bytes[..end]).unwrap();
    assert!(header.starts_with("ply\n"));
    assert!(header.contains("format binary_little_endian 1.0"));
    let mut count = 0;
    let mut props = Vec::new();
    for line in header.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["element", "vertex", n] => count = n.parse().unwrap(),
            ["property", ty, name] => props.push((ty.to_string(), name.to_string())),
            _ => {}
        }
    }
    let has_color = props.iter().any(|(_, n)| n == "red");
    let stride = 12 + if has_color { 3 } else { 0 };
    let body = &bytes[end..];
    assert_eq!(body.len(), count * stride, "body size");
    let mut pts = Vec::with_capacity(count);
    let mut cols = Vec::new();
    for rec in body.chunks_exact(stride) {
        let f = |i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().unwrap());
        pts.push([f(0), f(1), f(2)]);
        if has_color {
            cols.push([rec[12], rec[13], rec[14]]);
        }
    }
    (pts, has_color.then_some(cols))
}
