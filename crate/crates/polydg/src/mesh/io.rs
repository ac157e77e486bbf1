use super::SimplicialMesh;
use crate::geometry::Point2;
use crate::{Error, Result};
use std::io::{BufRead, Write};

/// Writes a mesh in the plain-text format:
///
/// ```text
/// # optional comment lines
/// vertices <n>
/// <x> <y>          (n lines)
/// triangles <m>
/// <i> <j> <k>      (m lines, zero-based vertex indices)
/// ```
pub fn write_mesh_text<W: Write>(mesh: &SimplicialMesh, mut w: W) -> Result<()> {
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {}", v.x, v.y)?;
    }
    writeln!(w, "triangles {}", mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Reads a mesh written by [`write_mesh_text`]. Lines starting with `#` are
/// ignored.
pub fn read_mesh_text<R: BufRead>(r: R) -> Result<SimplicialMesh> {
    let mut lines = r
        .lines()
        .collect::<std::io::Result<Vec<String>>>()?
        .into_iter()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let header = |line: Option<String>, tag: &str| -> Result<usize> {
        let line = line.ok_or_else(|| Error::Parse(format!("missing '{tag}' header")))?;
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some(t), Some(n)) if t == tag => n
                .parse()
                .map_err(|_| Error::Parse(format!("bad count in '{line}'"))),
            _ => Err(Error::Parse(format!("expected '{tag} <count>', got '{line}'"))),
        }
    };

    let nv = header(lines.next(), "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of vertex list".into()))?;
        let mut parts = line.split_whitespace();
        let x: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad vertex line '{line}'")))?;
        let y: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad vertex line '{line}'")))?;
        vertices.push(Point2::new(x, y));
    }

    let nt = header(lines.next(), "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of triangle list".into()))?;
        let mut parts = line.split_whitespace();
        let mut tri = [0usize; 3];
        for slot in tri.iter_mut() {
            *slot = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad triangle line '{line}'")))?;
        }
        triangles.push(tri);
    }

    SimplicialMesh::new(vertices, triangles)
}
