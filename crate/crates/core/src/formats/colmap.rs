//! COLMAP sparse-reconstruction text format (cameras.txt, images.txt,
//! points3D.txt).
//!
//! Only the text export is supported. PINHOLE and SIMPLE_PINHOLE camera
//! models map to [`Intrinsics`]; image quaternions are converted to rotation
//! matrices and renormalized; the alternating POINTS2D lines in images.txt
//! are skipped; POINT3D lines keep XYZ, RGB, and the track length, ignoring
//! the reprojection error.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::FormatError;
use crate::geom::{Intrinsics, Point3, Pose};

#[derive(Debug, Clone)]
pub struct ColmapImage {
    pub pose: Pose,
    pub camera_id: u32,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct ColmapPoint {
    pub position: Point3,
    pub color: [u8; 3],
    pub track_len: usize,
}

#[derive(Debug, Clone)]
pub struct ColmapModel {
    pub cameras: BTreeMap<u32, Intrinsics>,
    pub images: BTreeMap<u32, ColmapImage>,
    pub points: Vec<ColmapPoint>,
    /// Parse-time diagnostics, e.g. quaternions renormalized beyond 1e-3.
    pub warnings: Vec<String>,
}

impl ColmapModel {
    /// Points as bare world positions.
    pub fn point_positions(&self) -> Vec<Point3> {
        self.points.iter().map(|p| p.position).collect()
    }
}

fn parse_err(file: &'static str, line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { file, line, msg: msg.into() }
}

fn parse_field<T: std::str::FromStr>(
    file: &'static str,
    line: usize,
    tok: &str,
    what: &str,
) -> Result<T, FormatError> {
    tok.parse()
        .map_err(|_| parse_err(file, line, format!("bad {what}: {tok:?}")))
}

fn parse_cameras(text: &str) -> Result<BTreeMap<u32, Intrinsics>, FormatError> {
    const FILE: &str = "cameras.txt";
    let mut cameras = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 {
            return Err(parse_err(FILE, line_no, "camera line needs at least 4 fields"));
        }
        let camera_id: u32 = parse_field(FILE, line_no, tokens[0], "camera id")?;
        let model = tokens[1];
        let width: usize = parse_field(FILE, line_no, tokens[2], "width")?;
        let height: usize = parse_field(FILE, line_no, tokens[3], "height")?;
        let params: Vec<f64> = tokens[4..]
            .iter()
            .map(|t| parse_field(FILE, line_no, t, "camera parameter"))
            .collect::<Result<_, _>>()?;
        let (fx, fy, cx, cy) = match model {
            "PINHOLE" => {
                if params.len() != 4 {
                    return Err(parse_err(FILE, line_no, "PINHOLE needs 4 parameters"));
                }
                (params[0], params[1], params[2], params[3])
            }
            "SIMPLE_PINHOLE" => {
                if params.len() != 3 {
                    return Err(parse_err(FILE, line_no, "SIMPLE_PINHOLE needs 3 parameters"));
                }
                (params[0], params[0], params[1], params[2])
            }
            other => return Err(FormatError::UnsupportedCameraModel(other.to_string())),
        };
        let intrinsics = Intrinsics::new(fx, fy, cx, cy, width, height)
            .map_err(|e| parse_err(FILE, line_no, e.to_string()))?;
        cameras.insert(camera_id, intrinsics);
    }
    Ok(cameras)
}

fn parse_images(
    text: &str,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<u32, ColmapImage>, FormatError> {
    const FILE: &str = "images.txt";
    let mut images = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 10 {
            return Err(parse_err(FILE, line_no, "image line needs 10 fields"));
        }
        let image_id: u32 = parse_field(FILE, line_no, tokens[0], "image id")?;
        let q: [f64; 4] = [
            parse_field(FILE, line_no, tokens[1], "qw")?,
            parse_field(FILE, line_no, tokens[2], "qx")?,
            parse_field(FILE, line_no, tokens[3], "qy")?,
            parse_field(FILE, line_no, tokens[4], "qz")?,
        ];
        let t: [f64; 3] = [
            parse_field(FILE, line_no, tokens[5], "tx")?,
            parse_field(FILE, line_no, tokens[6], "ty")?,
            parse_field(FILE, line_no, tokens[7], "tz")?,
        ];
        let camera_id: u32 = parse_field(FILE, line_no, tokens[8], "camera id")?;
        let name = tokens[9..].join(" ");

        let q_norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let deviation = (q_norm - 1.0).abs();
        if !deviation.is_finite() || deviation > 1e-1 {
            return Err(parse_err(
                FILE,
                line_no,
                format!("quaternion norm {q_norm} deviates from 1 beyond 1e-1"),
            ));
        }
        if deviation > 1e-3 {
            warnings.push(format!(
                "images.txt line {line_no}: quaternion norm {q_norm} renormalized"
            ));
        }
        let pose = Pose::from_quaternion(q, t).map_err(|e| parse_err(FILE, line_no, e.to_string()))?;
        images.insert(image_id, ColmapImage { pose, camera_id, name });

        // The next line carries the POINTS2D triples (possibly empty).
        lines.next();
    }
    Ok(images)
}

fn parse_points(text: &str) -> Result<Vec<ColmapPoint>, FormatError> {
    const FILE: &str = "points3D.txt";
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 8 {
            return Err(parse_err(FILE, line_no, "point line needs at least 8 fields"));
        }
        let x: f64 = parse_field(FILE, line_no, tokens[1], "x")?;
        let y: f64 = parse_field(FILE, line_no, tokens[2], "y")?;
        let z: f64 = parse_field(FILE, line_no, tokens[3], "z")?;
        let position = Point3::new(x, y, z);
        if !position.is_finite() {
            return Err(parse_err(FILE, line_no, "point coordinates not finite"));
        }
        let color = [
            parse_field::<u8>(FILE, line_no, tokens[4], "r")?,
            parse_field::<u8>(FILE, line_no, tokens[5], "g")?,
            parse_field::<u8>(FILE, line_no, tokens[6], "b")?,
        ];
        // tokens[7] is the reprojection error, ignored.
        let track_tokens = tokens.len() - 8;
        if track_tokens % 2 != 0 {
            return Err(parse_err(FILE, line_no, "dangling track element"));
        }
        points.push(ColmapPoint { position, color, track_len: track_tokens / 2 });
    }
    Ok(points)
}

pub fn parse_colmap_text(
    cameras_text: &str,
    images_text: &str,
    points_text: &str,
) -> Result<ColmapModel, FormatError> {
    let mut warnings = Vec::new();
    let cameras = parse_cameras(cameras_text)?;
    let images = parse_images(images_text, &mut warnings)?;
    let points = parse_points(points_text)?;
    for (image_id, image) in &images {
        if !cameras.contains_key(&image.camera_id) {
            return Err(FormatError::Parse {
                file: "images.txt",
                line: 0,
                msg: format!(
                    "image {image_id} references missing camera {}",
                    image.camera_id
                ),
            });
        }
    }
    Ok(ColmapModel { cameras, images, points, warnings })
}

/// Text exports as `(cameras, images, points3D)`. Floats use the shortest
/// round-trip representation; track entries are written as placeholder
/// `0 0` pairs so the track length survives a round trip.
pub fn write_colmap_text(model: &ColmapModel) -> (String, String, String) {
    let mut cameras = String::new();
    for (id, k) in &model.cameras {
        writeln!(
            cameras,
            "{id} PINHOLE {} {} {} {} {} {}",
            k.width, k.height, k.fx, k.fy, k.cx, k.cy
        )
        .expect("string write");
    }

    let mut images = String::new();
    for (id, image) in &model.images {
        let q = image.pose.to_quaternion();
        let t = image.pose.translation();
        writeln!(
            images,
            "{id} {} {} {} {} {} {} {} {} {}",
            q[0], q[1], q[2], q[3], t[0], t[1], t[2], image.camera_id, image.name
        )
        .expect("string write");
        images.push('\n'); // empty POINTS2D line
    }

    let mut points = String::new();
    for (idx, p) in model.points.iter().enumerate() {
        write!(
            points,
            "{} {} {} {} {} {} {} 0",
            idx + 1,
            p.position.x,
            p.position.y,
            p.position.z,
            p.color[0],
            p.color[1],
            p.color[2]
        )
        .expect("string write");
        for _ in 0..p.track_len {
            points.push_str(" 0 0");
        }
        points.push('\n');
    }

    (cameras, images, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAMERAS: &str = "# Camera list with one line of data per camera:\n\
        #   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n\
        1 PINHOLE 640 480 500 510 320 240\n";

    // Image 1: identity quaternion. Image 2: 90 degrees about z,
    // q = (cos45, 0, 0, sin45).
    fn images_text() -> String {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        format!(
            "# Image list\n\
             1 1 0 0 0 0.5 -0.25 2 1 frame_0001.ppm\n\
             \n\
             2 {h} 0 0 {h} 0 0 1 1 frame_0002.ppm\n\
             1.5 2.5 7 -1 -1 -1\n"
        )
    }

    const POINTS: &str = "# 3D point list\n\
        1 1.0 2.0 3.0 255 0 0 0.5 1 0 2 1\n\
        2 -1.0 0.5 4.0 0 255 0 0.1\n\
        3 0.25 -0.75 2.5 10 20 30 0.0 1 5\n";

    #[test]
    fn fixture_parses_to_hand_computed_values() {
        let model = parse_colmap_text(CAMERAS, &images_text(), POINTS).unwrap();
        assert_eq!(model.cameras.len(), 1);
        let k = &model.cameras[&1];
        assert_eq!((k.fx, k.fy, k.cx, k.cy), (500.0, 510.0, 320.0, 240.0));
        assert_eq!((k.width, k.height), (640, 480));

        assert_eq!(model.images.len(), 2);
        let img1 = &model.images[&1];
        assert_eq!(img1.name, "frame_0001.ppm");
        assert_eq!(img1.camera_id, 1);
        assert_eq!(img1.pose.rotation(), &crate::geom::Mat3::IDENTITY);
        assert_eq!(img1.pose.translation(), [0.5, -0.25, 2.0]);

        // Hand-computed rotation for a 90 degree turn about z:
        // [[0,-1,0],[1,0,0],[0,0,1]].
        let img2 = &model.images[&2];
        let r = img2.pose.rotation().0;
        let expected = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - expected[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }

        assert_eq!(model.points.len(), 3);
        assert_eq!(model.points[0].position, Point3::new(1.0, 2.0, 3.0));
        assert_eq!(model.points[0].color, [255, 0, 0]);
        assert_eq!(model.points[0].track_len, 2);
        assert_eq!(model.points[1].track_len, 0);
        assert_eq!(model.points[2].track_len, 1);
        assert!(model.warnings.is_empty());
    }

    #[test]
    fn comments_are_skipped() {
        let with_extra = format!("# leading comment\n# another\n{}", images_text());
        let a = parse_colmap_text(CAMERAS, &images_text(), POINTS).unwrap();
        let b = parse_colmap_text(CAMERAS, &with_extra, POINTS).unwrap();
        assert_eq!(a.images.len(), b.images.len());
        assert_eq!(
            a.images[&2].pose.translation(),
            b.images[&2].pose.translation()
        );
    }

    #[test]
    fn unknown_camera_model_named_in_error() {
        let text = "1 OPENCV 640 480 500 500 320 240 0 0 0 0\n";
        match parse_colmap_text(text, "", "") {
            Err(FormatError::UnsupportedCameraModel(m)) => assert_eq!(m, "OPENCV"),
            other => panic!("expected unsupported model, got {other:?}"),
        }
    }

    #[test]
    fn simple_pinhole_duplicates_focal() {
        let text = "1 SIMPLE_PINHOLE 64 48 100 32 24\n";
        let model = parse_colmap_text(text, "", "").unwrap();
        let k = &model.cameras[&1];
        assert_eq!((k.fx, k.fy), (100.0, 100.0));
    }

    #[test]
    fn quaternion_bands() {
        // Slightly off-unit: renormalized with a warning.
        let imgs = "1 1.005 0 0 0 0 0 0 1 a.ppm\n\n";
        let model = parse_colmap_text(CAMERAS, imgs, "").unwrap();
        assert_eq!(model.warnings.len(), 1);
        assert_eq!(model.images[&1].pose.rotation(), &crate::geom::Mat3::IDENTITY);

        // Within 1e-3: silent.
        let imgs = "1 1.0005 0 0 0 0 0 0 1 a.ppm\n\n";
        let model = parse_colmap_text(CAMERAS, imgs, "").unwrap();
        assert!(model.warnings.is_empty());

        // Beyond 1e-1: error.
        let imgs = "1 1.2 0 0 0 0 0 0 1 a.ppm\n\n";
        assert!(parse_colmap_text(CAMERAS, imgs, "").is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let bad_points = "1 1.0 2.0 notanumber 255 0 0 0.5\n";
        match parse_colmap_text(CAMERAS, &images_text(), bad_points) {
            Err(FormatError::Parse { file, line, .. }) => {
                assert_eq!(file, "points3D.txt");
                assert_eq!(line, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn image_referencing_missing_camera_rejected() {
        let imgs = "1 1 0 0 0 0 0 0 9 a.ppm\n\n";
        assert!(parse_colmap_text(CAMERAS, imgs, "").is_err());
    }

    #[test]
    fn nonfinite_point_rejected() {
        let pts = "1 inf 0 0 255 0 0 0.1\n";
        assert!(parse_colmap_text(CAMERAS, &images_text(), pts).is_err());
    }

    #[test]
    fn write_then_read_recovers_model() {
        let model = parse_colmap_text(CAMERAS, &images_text(), POINTS).unwrap();
        let (c, i, p) = write_colmap_text(&model);
        let back = parse_colmap_text(&c, &i, &p).unwrap();
        assert_eq!(back.cameras[&1], model.cameras[&1]);
        assert_eq!(back.images.len(), model.images.len());
        for (id, image) in &model.images {
            let b = &back.images[id];
            assert_eq!(b.name, image.name);
            assert_eq!(b.camera_id, image.camera_id);
            for i in 0..3 {
                for j in 0..3 {
                    assert!(
                        (b.pose.rotation().0[i][j] - image.pose.rotation().0[i][j]).abs() < 1e-12
                    );
                }
                assert!((b.pose.translation()[i] - image.pose.translation()[i]).abs() < 1e-15);
            }
        }
        assert_eq!(back.points.len(), model.points.len());
        for (a, b) in back.points.iter().zip(&model.points) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.color, b.color);
            assert_eq!(a.track_len, b.track_len);
        }
    }
}
