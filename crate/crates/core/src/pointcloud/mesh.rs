//! Triangle meshes: OFF ingestion and area-weighted surface sampling.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::read_to_string;
use crate::linalg::{cross3, norm3, sub3, Vec3};
use crate::rng::SeededRng;
use crate::scalar::Real;

use super::PointCloud;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates that every face index is in range.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Empty("mesh has no faces".into()));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::IndexOutOfRange {
                    face: fi,
                    index: bad,
                    vertex_count: vertices.len(),
                });
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, face: usize) -> [Vec3<T>; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, face: usize) -> T {
        let [a, b, c] = self.triangle(face);
        norm3(cross3(sub3(b, a), sub3(c, a))) * T::lit(0.5)
    }

    pub fn total_area(&self) -> T {
        (0..self.faces.len()).map(|f| self.triangle_area(f)).sum()
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a non-negative integer, found {tok:?}"),
    })
}

/// Parses an OFF mesh. The counts line may be fused with the header
/// (`OFF490 518 0`, as found in ModelNet). Polygons with more than three
/// vertices are fan-triangulated from their first vertex.
pub fn parse_off<T: Real>(text: &str) -> Result<TriangleMesh<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::OffHeader("file is empty".into()))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::OffHeader(format!("expected 'OFF', found {header:?}")))?;
    let (counts_line, counts) = if rest.trim().is_empty() {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::OffHeader("missing counts line".into()))?;
        (n, l.to_string())
    } else {
        (1, rest.trim().to_string())
    };
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(Error::OffHeader(format!(
            "counts line {counts_line} must give vertex and face counts"
        )));
    }
    let n_vertices = parse_usize(counts[0], counts_line)?;
    let n_faces = parse_usize(counts[1], counts_line)?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, l) = lines.next().ok_or_else(|| Error::Parse {
            line: counts_line,
            message: format!("file ends before {n_vertices} vertices were read"),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(Error::Parse {
                line: ln,
                message: "vertex line needs 3 coordinates".into(),
            });
        }
        let mut v = [T::zero(); 3];
        for k in 0..3 {
            let x: f64 = toks[k].parse().map_err(|_| Error::Parse {
                line: ln,
                message: format!("not a number: {:?}", toks[k]),
            })?;
            v[k] = T::lit(x);
        }
        vertices.push(v);
    }

    let mut faces = Vec::with_capacity(n_faces);
    for fi in 0..n_faces {
        let (ln, l) = lines.next().ok_or_else(|| Error::Parse {
            line: counts_line,
            message: format!("file ends before {n_faces} faces were read"),
        })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let n = parse_usize(toks[0], ln)?;
        if n < 3 || toks.len() < n + 1 {
            return Err(Error::Parse {
                line: ln,
                message: format!("face needs at least 3 indices and declares {n}"),
            });
        }
        let idx = toks[1..=n]
            .iter()
            .map(|t| parse_usize(t, ln))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= n_vertices) {
            return Err(Error::IndexOutOfRange {
                face: fi,
                index: bad,
                vertex_count: n_vertices,
            });
        }
        for k in 1..n - 1 {
            faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn load_off<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    parse_off(&read_to_string(path.as_ref())?)
}

/// Draws `n` points: a triangle is chosen with probability proportional to
/// its area, then a point uniformly inside it.
pub fn sample_surface<T: Real>(
    mesh: &TriangleMesh<T>,
    n: usize,
    rng: &mut SeededRng,
) -> Result<PointCloud<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0f64;
    for f in 0..mesh.faces.len() {
        total += mesh.triangle_area(f).as_f64();
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh);
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.uniform() * total;
        let face = cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(face);
        let s = rng.uniform().sqrt();
        let r2 = rng.uniform();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        let p = [0, 1, 2].map(|k| {
            T::lit(wa) * a[k] + T::lit(wb) * b[k] + T::lit(wc) * c[k]
        });
        points.push(p);
    }
    PointCloud::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_off() {
        let m: TriangleMesh<f64> = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        assert_eq!(m.vertices().len(), 3);
    }

    #[test]
    fn fused_header_and_comments() {
        let text = "OFF3 1 0\n# comment\n0 0 0\n1 0 0 # trailing\n0 1 0\n3 0 1 2 255 0 0\n";
        let m: TriangleMesh<f64> = parse_off(text).unwrap();
        assert_eq!(m.faces().len(), 1);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m: TriangleMesh<f64> = parse_off(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_index() {
        let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n";
        assert!(matches!(
            parse_off::<f64>(text),
            Err(Error::IndexOutOfRange { index: 3, vertex_count: 3, .. })
        ));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_off::<f64>("PLY\n"), Err(Error::OffHeader(_))));
        assert!(matches!(parse_off::<f64>(""), Err(Error::OffHeader(_))));
        assert!(matches!(parse_off::<f64>("OFF\n"), Err(Error::OffHeader(_))));
    }

    #[test]
    fn truncated_file() {
        assert!(matches!(
            parse_off::<f64>("OFF\n3 1 0\n0 0 0\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn degenerate_mesh_cannot_be_sampled() {
        let m = TriangleMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]])
            .unwrap();
        assert!(matches!(
            sample_surface(&m, 10, &mut SeededRng::new(0)),
            Err(Error::DegenerateMesh)
        ));
    }

    #[test]
    fn single_sample_lies_on_triangle() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let pc = sample_surface(&m, 1, &mut SeededRng::new(9)).unwrap();
        assert_eq!(pc.len(), 1);
        let p = pc.points()[0];
        assert_eq!(p[2], 0.0);
        assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0 + 1e-15);
    }
}
