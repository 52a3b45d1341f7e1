//! The `.stmesh` ASCII exchange format.
//!
//! Grammar (line oriented, whitespace separated):
//! ```text
//! stmesh 1
//! dims <embed> <cell>
//! vertices <n>
//! <i> <x0> ... <x_{embed-1}> <tag>
//! cells <m>
//! <j> <v0> ... <v_cell> <patch>
//! ```
//! with `tag` one of `object|box|interior` and `patch` one of
//! `initial|intermediate|terminating`. Coordinates are printed with 17
//! significant digits, so read(write(mesh)) reproduces the mesh bit-exactly.

use crate::error::{Error, Result};
use crate::geom::{Patch, SimplicialMesh, SpaceTimePoint, VertexTag};
use std::io::{BufRead, Write};
use std::path::Path;

fn tag_str(tag: VertexTag) -> &'static str {
    match tag {
        VertexTag::ObjectBoundary => "object",
        VertexTag::BoxBoundary => "box",
        VertexTag::Interior => "interior",
    }
}

fn patch_str(patch: Patch) -> &'static str {
    match patch {
        Patch::Initial => "initial",
        Patch::Intermediate => "intermediate",
        Patch::Terminating => "terminating",
    }
}

pub fn write_stmesh<const D: usize>(mesh: &SimplicialMesh<D>, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "stmesh 1")?;
    writeln!(f, "dims {} {}", D, D - 1)?;
    writeln!(f, "vertices {}", mesh.vertices.len())?;
    for (i, (v, tag)) in mesh.vertices.iter().zip(&mesh.vertex_tag).enumerate() {
        write!(f, "{i}")?;
        for c in &v.coords {
            write!(f, " {c:.16e}")?;
        }
        writeln!(f, " {}", tag_str(*tag))?;
    }
    writeln!(f, "cells {}", mesh.cells.len())?;
    for (j, (cell, patch)) in mesh.cells.iter().zip(&mesh.patch).enumerate() {
        write!(f, "{j}")?;
        for v in cell {
            write!(f, " {v}")?;
        }
        writeln!(f, " {}", patch_str(*patch))?;
    }
    Ok(())
}

/// A mesh read back from disk: triangles in 3D or tetrahedra in 4D.
#[derive(Debug, Clone)]
pub enum MeshFile {
    Tri(SimplicialMesh<3>),
    Tet(SimplicialMesh<4>),
}

impl MeshFile {
    pub fn cell_count(&self) -> usize {
        match self {
            MeshFile::Tri(m) => m.cells.len(),
            MeshFile::Tet(m) => m.cells.len(),
        }
    }

    pub fn expect_tet(self) -> Result<SimplicialMesh<4>> {
        match self {
            MeshFile::Tet(m) => Ok(m),
            MeshFile::Tri(_) => Err(Error::invalid_input("expected a tetrahedral (4D) mesh")),
        }
    }

    pub fn expect_tri(self) -> Result<SimplicialMesh<3>> {
        match self {
            MeshFile::Tri(m) => Ok(m),
            MeshFile::Tet(_) => Err(Error::invalid_input("expected a triangular (3D) mesh")),
        }
    }
}

struct LineReader<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    fn next_line(&mut self) -> Result<(usize, String)> {
        loop {
            self.line_no += 1;
            match self.inner.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok((self.line_no, line));
                    }
                }
                None => {
                    return Err(Error::Parse {
                        line: self.line_no,
                        msg: "unexpected end of file".into(),
                    })
                }
            }
        }
    }
}

pub fn read_stmesh(path: &Path) -> Result<MeshFile> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut rd = LineReader { inner: f.lines(), line_no: 0 };

    let (ln, header) = rd.next_line()?;
    let mut it = header.split_whitespace();
    if it.next() != Some("stmesh") || it.next() != Some("1") {
        return Err(Error::Parse { line: ln, msg: "expected header 'stmesh 1'".into() });
    }
    let (ln, dims) = rd.next_line()?;
    let mut it = dims.split_whitespace();
    if it.next() != Some("dims") {
        return Err(Error::Parse { line: ln, msg: "expected 'dims <embed> <cell>'".into() });
    }
    let embed: usize = parse_field(it.next(), ln)?;
    let cell: usize = parse_field(it.next(), ln)?;
    match (embed, cell) {
        (3, 2) => Ok(MeshFile::Tri(read_body::<3, _>(&mut rd)?)),
        (4, 3) => Ok(MeshFile::Tet(read_body::<4, _>(&mut rd)?)),
        _ => Err(Error::Parse {
            line: ln,
            msg: format!("unsupported dims {embed} {cell}; expected '3 2' or '4 3'"),
        }),
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.ok_or_else(|| Error::Parse { line, msg: "missing field".into() })?
        .parse()
        .map_err(|e| Error::Parse { line, msg: format!("{e}") })
}

fn read_body<const D: usize, R: BufRead>(rd: &mut LineReader<R>) -> Result<SimplicialMesh<D>> {
    let (ln, vh) = rd.next_line()?;
    let mut it = vh.split_whitespace();
    if it.next() != Some("vertices") {
        return Err(Error::Parse { line: ln, msg: "expected 'vertices <n>'".into() });
    }
    let nv: usize = parse_field(it.next(), ln)?;
    let mut mesh = SimplicialMesh::<D>::empty();
    for want in 0..nv {
        let (ln, line) = rd.next_line()?;
        let mut it = line.split_whitespace();
        let idx: usize = parse_field(it.next(), ln)?;
        if idx != want {
            return Err(Error::Parse {
                line: ln,
                msg: format!("vertex index {idx} out of order; expected {want}"),
            });
        }
        let mut coords = [0.0; D];
        for c in coords.iter_mut() {
            *c = parse_field(it.next(), ln)?;
        }
        let tag = match it.next() {
            Some("object") => VertexTag::ObjectBoundary,
            Some("box") => VertexTag::BoxBoundary,
            Some("interior") => VertexTag::Interior,
            other => {
                return Err(Error::Parse { line: ln, msg: format!("bad vertex tag {other:?}") })
            }
        };
        mesh.push_vertex(SpaceTimePoint::new(coords), tag);
    }
    let (ln, ch) = rd.next_line()?;
    let mut it = ch.split_whitespace();
    if it.next() != Some("cells") {
        return Err(Error::Parse { line: ln, msg: "expected 'cells <m>'".into() });
    }
    let nc: usize = parse_field(it.next(), ln)?;
    for want in 0..nc {
        let (ln, line) = rd.next_line()?;
        let mut it = line.split_whitespace();
        let idx: usize = parse_field(it.next(), ln)?;
        if idx != want {
            return Err(Error::Parse {
                line: ln,
                msg: format!("cell index {idx} out of order; expected {want}"),
            });
        }
        let mut cell = [0usize; D];
        for v in cell.iter_mut() {
            *v = parse_field(it.next(), ln)?;
            if *v >= nv {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("cell vertex {v} out of range {nv}"),
                });
            }
        }
        let patch = match it.next() {
            Some("initial") => Patch::Initial,
            Some("intermediate") => Patch::Intermediate,
            Some("terminating") => Patch::Terminating,
            other => {
                return Err(Error::Parse { line: ln, msg: format!("bad patch label {other:?}") })
            }
        };
        mesh.push_cell(cell, patch);
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_triangle() -> SimplicialMesh<3> {
        SimplicialMesh {
            vertices: vec![
                SpaceTimePoint::new([0.0, 0.0, 0.0]),
                SpaceTimePoint::new([1.0, 0.0, 0.0]),
                SpaceTimePoint::new([0.0, 1.0, 0.0]),
            ],
            cells: vec![[0, 1, 2]],
            vertex_tag: vec![VertexTag::BoxBoundary; 3],
            patch: vec![Patch::Initial],
        }
    }

    #[test]
    fn single_triangle_is_eight_lines_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.stmesh");
        let mesh = single_triangle();
        write_stmesh(&mesh, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 8, "file:\n{text}");
        let back = read_stmesh(&path).unwrap().expect_tri().unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn four_d_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = SimplicialMesh::<4> {
            vertices: vec![
                SpaceTimePoint::new([0.1234567890123456, 0.0, 0.0, 0.5]),
                SpaceTimePoint::new([1.0, 1.0 / 3.0, 0.0, 0.5]),
                SpaceTimePoint::new([0.0, 1.0, std::f64::consts::PI, 0.5]),
                SpaceTimePoint::new([0.0, 0.0, 1.0, 1.5]),
            ],
            cells: vec![[0, 1, 2, 3]],
            vertex_tag: vec![
                VertexTag::ObjectBoundary,
                VertexTag::BoxBoundary,
                VertexTag::Interior,
                VertexTag::Interior,
            ],
            patch: vec![Patch::Intermediate],
        };
        let p1 = dir.path().join("a.stmesh");
        let p2 = dir.path().join("b.stmesh");
        write_stmesh(&mesh, &p1).unwrap();
        let back = read_stmesh(&p1).unwrap().expect_tet().unwrap();
        write_stmesh(&back, &p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(back, mesh);
    }

    #[test]
    fn truncated_file_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.stmesh");
        let mesh = single_triangle();
        write_stmesh(&mesh, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        std::fs::write(&path, cut).unwrap();
        match read_stmesh(&path) {
            Err(Error::Parse { line, .. }) => assert!(line >= 5, "line {line}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.stmesh");
        std::fs::write(&path, "stmesh 2\ndims 3 2\nvertices 0\ncells 0\n").unwrap();
        assert!(matches!(read_stmesh(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn out_of_range_cell_index_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("range.stmesh");
        std::fs::write(
            &path,
            "stmesh 1\ndims 3 2\nvertices 3\n0 0e0 0e0 0e0 interior\n1 1e0 0e0 0e0 interior\n2 0e0 1e0 0e0 interior\ncells 1\n0 0 1 7 initial\n",
        )
        .unwrap();
        assert!(matches!(read_stmesh(&path), Err(Error::Parse { line: 8, .. })));
    }
}
