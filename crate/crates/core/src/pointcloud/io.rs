//! XYZ text format: one point per line as three whitespace-separated decimal
//! floats. Blank lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::scalar::Real;

use super::PointCloud;

pub fn parse_xyz<T: Real>(text: &str) -> Result<PointCloud<T>> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut p = [T::zero(); 3];
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite coordinate {f:?}"),
                });
            }
            p[k] = T::lit(v);
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Empty("XYZ file contains no points".into()));
    }
    PointCloud::new(points)
}

pub fn load_xyz<T: Real>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    parse_xyz(&read_to_string(path.as_ref())?)
}

/// Formats with the shortest representation that parses back to the same
/// value.
pub fn write_xyz<T: Real>(pc: &PointCloud<T>) -> String {
    let mut out = String::with_capacity(pc.len() * 48);
    for p in pc.points() {
        let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
    }
    out
}

pub fn save_xyz<T: Real>(path: impl AsRef<Path>, pc: &PointCloud<T>) -> Result<()> {
    write_atomic(path.as_ref(), write_xyz(pc).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_points() {
        let pc: PointCloud<f64> = parse_xyz("0 0 0\n1 0 0").unwrap();
        assert_eq!(pc.points(), &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let pc: PointCloud<f64> = parse_xyz("# header\n\n1 2 3\n  # more\n4 5 6\n").unwrap();
        assert_eq!(pc.len(), 2);
    }

    #[test]
    fn reports_line_of_malformed_entry() {
        let err = parse_xyz::<f64>("0 0 0\n1 1 1\na b c\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_xyz::<f64>("0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse_xyz::<f64>(""), Err(Error::Empty(_))));
        assert!(matches!(parse_xyz::<f64>("# only a comment\n"), Err(Error::Empty(_))));
    }

    #[test]
    fn save_then_load_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.xyz");
        let pc = PointCloud::new(vec![
            [0.1, -1.0 / 3.0, 2.0e-17],
            [std::f64::consts::PI, 1e300, -0.0],
        ])
        .unwrap();
        save_xyz(&path, &pc).unwrap();
        let back: PointCloud<f64> = load_xyz(&path).unwrap();
        assert_eq!(back.points(), pc.points());
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_xyz::<f64>("/nonexistent/cloud.xyz"),
            Err(Error::Io { .. })
        ));
    }
}
