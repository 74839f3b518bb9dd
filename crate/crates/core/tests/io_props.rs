mod support;

use gcmvs::io::{self, PairEntry, PairList, PfmImage};
use gcmvs::{Camera, PointCloud};
use nalgebra::{Point3, Rotation3, Vector3};
use proptest::prelude::*;

fn arb_pfm() -> impl Strategy<Value = PfmImage> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop_oneof![Just(0.0f32), -1e6f32..1e6], w * h).prop_map(move |data| PfmImage { width: w, height: h, data })
    })
}

proptest! {
    #[test]
    fn pfm_round_trip(img in arb_pfm()) {
        prop_assert_eq!(io::read_pfm(&io::write_pfm(&img)).unwrap(), img);
    }

    #[test]
    fn cam_round_trip(
        f in 10.0f64..2000.0, cx in 0.0f64..1000.0, cy in 0.0f64..1000.0,
        a in -3.0f64..3.0, b in -1.5f64..1.5, c in -3.0f64..3.0,
        t in prop::array::uniform3(-50.0f64..50.0),
        range in prop::option::of((0.1f64..10.0, 0.001f64..1.0)),
    ) {
        let mut cam = Camera::from_pinhole(f, f * 1.1, cx, cy, *Rotation3::from_euler_angles(a, b, c).matrix(), Vector3::from(t)).unwrap();
        if let Some((min, step)) = range {
            cam = cam.with_depth_range(min, step);
        }
        let back: Camera<f64> = io::read_cam(&io::write_cam(&cam)).unwrap();
        prop_assert_eq!(back.intrinsics(), cam.intrinsics());
        prop_assert_eq!(back.extrinsics(), cam.extrinsics());
        prop_assert_eq!(back.depth_min, cam.depth_min);
        prop_assert_eq!(back.depth_interval, cam.depth_interval);
    }

    #[test]
    fn pair_round_trip(raw in prop::collection::vec(prop::collection::vec((0usize..500, 0.0f64..1e4), 0..8), 1..10)) {
        let list = PairList {
            entries: raw.into_iter().enumerate().map(|(i, sources)| PairEntry { ref_id: i, sources }).collect(),
        };
        prop_assert_eq!(io::read_pair(&io::write_pair(&list)).unwrap(), list);
    }

    #[test]
    fn ply_matches_reference_reader(pts in prop::collection::vec(prop::array::uniform3(-1e3f32..1e3), 0..60), colored in any::<bool>()) {
        let mut cloud = PointCloud::new(pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect());
        if colored {
            cloud.colors = Some((0..pts.len()).map(|i| [i as u8, (i * 7) as u8, 255]).collect());
        }
        let bytes = io::write_ply(&cloud);
        let (ref_pts, ref_cols) = support::read_simple_ply(&bytes);
        prop_assert_eq!(&ref_pts, &pts);
        prop_assert_eq!(&ref_cols, &cloud.colors);
        let back: PointCloud<f32> = io::read_ply(&bytes).unwrap();
        prop_assert_eq!(back.points, cloud.points);
    }
}

#[test]
fn big_endian_pfm_is_read() {
    let mut bytes = b"Pf\n2 2\n1.0\n".to_vec();
    // bottom row first
    for v in [3.0f32, 4.0, 1.0, 2.0] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    let img = io::read_pfm(&bytes).unwrap();
    assert_eq!(img.data, vec![1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn malformed_pfm_is_rejected() {
    for bad in [
        &b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0"[..],
        b"Pf\n2 2\n-1.0\n\0\0\0\0",
        b"Pf\nx 2\n-1.0\n",
        b"Pf\n1 1\n0\n\0\0\0\0",
        b"",
    ] {
        assert!(io::read_pfm(bad).is_err());
    }
}

#[test]
fn ascii_and_big_endian_ply_are_read() {
    let ascii = b"ply\nformat ascii 1.0\ncomment x\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n1 2 3 10 20 30\n-1 0.5 4 1 2 3\n3 0 1 1\n";
    let c: PointCloud<f64> = io::read_ply(ascii).unwrap();
    assert_eq!(c.points, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-1.0, 0.5, 4.0)]);
    assert_eq!(c.colors, Some(vec![[10, 20, 30], [1, 2, 3]]));

    let mut be = b"ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
    for v in [1.5f32, -2.0, 8.0] {
        be.extend_from_slice(&v.to_be_bytes());
    }
    let c: PointCloud<f64> = io::read_ply(&be).unwrap();
    assert_eq!(c.points, vec![Point3::new(1.5, -2.0, 8.0)]);
}

#[test]
fn malformed_ply_is_rejected() {
    let header = "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    let mut truncated = header.as_bytes().to_vec();
    truncated.extend_from_slice(&[0u8; 20]);
    let mut trailing = header.as_bytes().to_vec();
    trailing.extend_from_slice(&[0u8; 28]);
    for bad in [
        truncated,
        trailing,
        b"ply\nelement vertex 0\nend_header\n".to_vec(),
        b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float y\nproperty float z\nend_header\n1 2\n".to_vec(),
        b"not a ply".to_vec(),
    ] {
        assert!(io::read_ply::<f64>(&bad).is_err(), "{:?}", String::from_utf8_lossy(&bad));
    }
}

#[test]
fn malformed_cam_and_pair_are_rejected() {
    let good = io::write_cam(&Camera::from_pinhole(100.0, 100.0, 50.0, 40.0, nalgebra::Matrix3::identity(), Vector3::zeros()).unwrap());
    assert!(io::read_cam::<f64>(&good).is_ok());
    for bad in [
        good.replace("extrinsic", "extrinsics"),
        good.replacen("100", "abc", 1),
        format!("{good}\n1 2 3\n"),
        format!("{good}\n-1 0.5\n"),
        good.lines().take(4).collect::<Vec<_>>().join("\n"),
    ] {
        assert!(io::read_cam::<f64>(&bad).is_err(), "{bad}");
    }
    for bad in ["2\n0\n1 1 5.0\n", "1\n0\n2 1 5.0\n", "x\n", "1\n0\n1 1\n", "1\n0\n1 1 5.0\nextra\n"] {
        assert!(io::read_pair(bad).is_err(), "{bad:?}");
    }
}
