//! STL reading and writing, binary and ASCII. All lengths are millimetres.
//!
//! Binary files are 80 header bytes, a little-endian `u32` facet count and 50
//! bytes per facet (normal, three vertices as `f32`, a `u16` attribute). A
//! file whose size equals `84 + 50 * count` is read as binary even when the
//! header starts with `solid`, which many exporters write.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, TriMesh};
use crate::geometry::vec3::{cross, normalize, sub, Vec3};

pub const HEADER_LEN: usize = 80;
pub const FACET_LEN: usize = 50;
/// Default vertex weld distance (mm).
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum StlError {
    #[error("truncated STL: {0}")]
    TruncatedFile(String),
    #[error("facet count field says {declared}, payload holds {actual}")]
    FacetCountMismatch { declared: u32, actual: usize },
    #[error("unparsable ASCII STL at line {line}: {message}")]
    UnparsableAscii { line: usize, message: String },
    #[error("non-finite vertex coordinate in facet {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StlFormat {
    Binary,
    Ascii,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub enum StlHeader {
    Binary([u8; HEADER_LEN]),
    Ascii(String),
}

/// Facet soup as stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub struct StlDocument {
    pub header: StlHeader,
    pub facets: Vec<Facet>,
}

impl StlDocument {
    pub fn format(&self) -> StlFormat {
        match self.header {
            StlHeader::Binary(_) => StlFormat::Binary,
            StlHeader::Ascii(_) => StlFormat::Ascii,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StlDiagnostics {
    pub format: StlFormat,
    pub triangle_count: usize,
    pub vertex_count: usize,
    /// Triangles dropped because welding collapsed two of their corners.
    pub degenerate_dropped: usize,
    pub watertight: bool,
    pub bounding_box: Aabb,
}

#[derive(Debug, Clone)]
pub struct StlRead {
    pub mesh: TriMesh,
    pub diagnostics: StlDiagnostics,
}

pub fn write_stl(mesh: &TriMesh, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => write_binary(mesh),
        StlFormat::Ascii => write_ascii(mesh, "anvil").into_bytes(),
    }
}

fn write_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + FACET_LEN * mesh.triangles.len());
    let mut header = [b' '; HEADER_LEN];
    let tag = b"binary STL, units: mm";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangle(t).map(|v| v.map(|c| c as f32 as f64));
        let n = normalize(cross(sub(tri[1], tri[0]), sub(tri[2], tri[0])));
        for c in n {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for v in tri {
            for c in v {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn write_ascii(mesh: &TriMesh, name: &str) -> String {
    let mut s = String::with_capacity(256 * mesh.triangles.len() + 64);
    let _ = writeln!(s, "solid {name}");
    for t in 0..mesh.triangles.len() {
        let n = mesh.triangle_normal(t);
        let _ = writeln!(s, "  facet normal {:.8e} {:.8e} {:.8e}", n[0], n[1], n[2]);
        s.push_str("    outer loop\n");
        for v in mesh.triangle(t) {
            let _ = writeln!(s, "      vertex {:.8e} {:.8e} {:.8e}", v[0], v[1], v[2]);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}

/// True when the byte length is consistent with the binary facet count.
fn binary_size_matches(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    bytes.len() == HEADER_LEN + 4 + FACET_LEN * count
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    bytes[start..].starts_with(b"solid")
}

pub fn parse_stl(bytes: &[u8]) -> Result<StlDocument, StlError> {
    if binary_size_matches(bytes) {
        return parse_binary(bytes);
    }
    if looks_ascii(bytes) {
        return parse_ascii(bytes);
    }
    parse_binary(bytes)
}

fn parse_binary(bytes: &[u8]) -> Result<StlDocument, StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::TruncatedFile(format!("{} bytes, need at least 84", bytes.len())));
    }
    let declared = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    let payload = &bytes[HEADER_LEN + 4..];
    if payload.len() % FACET_LEN != 0 {
        return Err(StlError::TruncatedFile(format!(
            "payload of {} bytes is not a whole number of facets",
            payload.len()
        )));
    }
    let actual = payload.len() / FACET_LEN;
    if actual != declared as usize {
        return Err(StlError::FacetCountMismatch { declared, actual });
    }
    let f32_at = |chunk: &[u8], k: usize| f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().unwrap());
    let mut facets = Vec::with_capacity(actual);
    for (i, chunk) in payload.chunks_exact(FACET_LEN).enumerate() {
        let normal = [f32_at(chunk, 0), f32_at(chunk, 1), f32_at(chunk, 2)];
        let mut vertices = [[0.0f32; 3]; 3];
        for (v, vert) in vertices.iter_mut().enumerate() {
            for (c, coord) in vert.iter_mut().enumerate() {
                *coord = f32_at(chunk, 3 + 3 * v + c);
            }
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(StlError::NonFinite(i));
        }
        facets.push(Facet { normal, vertices });
    }
    let mut header = [0u8; HEADER_LEN];
    header.copy_from_slice(&bytes[..HEADER_LEN]);
    Ok(StlDocument { header: StlHeader::Binary(header), facets })
}

struct Tokens<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines().enumerate().flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t))),
        );
        Tokens { inner: it.peekable(), line: 0 }
    }

    fn fail(&self, message: String) -> StlError {
        StlError::UnparsableAscii { line: self.line, message }
    }

    fn next(&mut self) -> Result<&'a str, StlError> {
        match self.inner.next() {
            Some((line, t)) => {
                self.line = line;
                Ok(t)
            }
            None => Err(self.fail("unexpected end of file".into())),
        }
    }

    fn expect(&mut self, word: &str) -> Result<(), StlError> {
        let t = self.next()?;
        if t == word {
            Ok(())
        } else {
            Err(self.fail(format!("expected `{word}`, found `{t}`")))
        }
    }

    fn number(&mut self) -> Result<f32, StlError> {
        let t = self.next()?;
        match t.parse::<f32>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.fail(format!("bad number `{t}`"))),
        }
    }

    fn rest_of_line(&mut self) -> Vec<&'a str> {
        let mut words = Vec::new();
        while let Some(&(line, t)) = self.inner.peek() {
            if line != self.line {
                break;
            }
            words.push(t);
            self.inner.next();
        }
        words
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<StlDocument, StlError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| StlError::UnparsableAscii { line: 0, message: format!("not UTF-8: {e}") })?;
    let mut tokens = Tokens::new(text);
    tokens.expect("solid")?;
    let name = tokens.rest_of_line().join(" ");
    let mut facets = Vec::new();
    loop {
        match tokens.next()? {
            "endsolid" => break,
            "facet" => {}
            t => return Err(tokens.fail(format!("expected `facet` or `endsolid`, found `{t}`"))),
        }
        tokens.expect("normal")?;
        let normal = [tokens.number()?, tokens.number()?, tokens.number()?];
        tokens.expect("outer")?;
        tokens.expect("loop")?;
        let mut vertices = [[0.0f32; 3]; 3];
        for v in &mut vertices {
            tokens.expect("vertex")?;
            *v = [tokens.number()?, tokens.number()?, tokens.number()?];
        }
        tokens.expect("endloop")?;
        tokens.expect("endfacet")?;
        facets.push(Facet { normal, vertices });
    }
    Ok(StlDocument { header: StlHeader::Ascii(name), facets })
}

/// Merges vertices closer than `tol` and builds an indexed mesh.
pub fn weld(facets: &[Facet], tol: f64) -> (TriMesh, usize) {
    let cell = |c: f64| (c / tol).floor() as i64;
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::with_capacity(facets.len());
    let mut dropped = 0;
    for f in facets {
        let mut tri = [0u32; 3];
        for (k, v) in f.vertices.iter().enumerate() {
            let p = [v[0] as f64, v[1] as f64, v[2] as f64];
            let key = [cell(p[0]), cell(p[1]), cell(p[2])];
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ids) = grid.get(&[key[0] + dx, key[1] + dy, key[2] + dz]) {
                            for &id in ids {
                                let q = vertices[id as usize];
                                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                                if d2 <= tol * tol {
                                    found = Some(id);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            tri[k] = found.unwrap_or_else(|| {
                let id = vertices.len() as u32;
                vertices.push(p);
                grid.entry(key).or_default().push(id);
                id
            });
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            dropped += 1;
        } else {
            triangles.push(tri);
        }
    }
    (TriMesh { vertices, triangles }, dropped)
}

pub fn read_stl(bytes: &[u8]) -> Result<StlRead, StlError> {
    read_stl_with_tolerance(bytes, WELD_TOLERANCE)
}

pub fn read_stl_with_tolerance(bytes: &[u8], tol: f64) -> Result<StlRead, StlError> {
    let doc = parse_stl(bytes)?;
    let (mesh, degenerate_dropped) = weld(&doc.facets, tol);
    let diagnostics = StlDiagnostics {
        format: doc.format(),
        triangle_count: mesh.triangles.len(),
        vertex_count: mesh.vertices.len(),
        degenerate_dropped,
        watertight: mesh.is_watertight(),
        bounding_box: mesh.bounding_box(),
    };
    Ok(StlRead { mesh, diagnostics })
}

pub fn read_stl_file(path: &std::path::Path) -> Result<StlRead, StlError> {
    read_stl(&std::fs::read(path)?)
}

pub fn write_stl_file(path: &std::path::Path, mesh: &TriMesh, format: StlFormat) -> Result<(), StlError> {
    std::fs::write(path, write_stl(mesh, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn right_triangle() -> TriMesh {
        TriMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]])
    }

    #[test]
    fn single_facet_binary_size() {
        assert_eq!(write_stl(&right_triangle(), StlFormat::Binary).len(), 134);
    }

    #[test]
    fn ascii_facet_lines() {
        let mut m = right_triangle();
        m.vertices.push([0.0, 0.0, 1.0]);
        m.triangles.push([0, 1, 3]);
        let text = String::from_utf8(write_stl(&m, StlFormat::Ascii)).unwrap();
        assert_eq!(text.lines().filter(|l| l.trim_start().starts_with("facet normal")).count(), 2);
    }

    #[test]
    fn count_mismatch() {
        let cube = TriMesh::cuboid([0.0; 3], [1.0; 3]);
        let mut bytes = write_stl(&TriMesh::new(cube.vertices.clone(), cube.triangles[..9].to_vec()), StlFormat::Binary);
        bytes[80..84].copy_from_slice(&10u32.to_le_bytes());
        assert!(matches!(parse_stl(&bytes), Err(StlError::FacetCountMismatch { declared: 10, actual: 9 })));
    }

    #[test]
    fn truncated_binary() {
        assert!(matches!(parse_stl(&[0u8; 40]), Err(StlError::TruncatedFile(_))));
        let mut bytes = write_stl(&right_triangle(), StlFormat::Binary);
        bytes.truncate(120);
        assert!(matches!(parse_stl(&bytes), Err(StlError::TruncatedFile(_))));
    }

    #[test]
    fn ascii_error_names_line() {
        let text = "solid x\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 zero\n";
        match parse_stl(text.as_bytes()) {
            Err(StlError::UnparsableAscii { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weld_merges_within_tolerance() {
        let f = |a: [f32; 3], b: [f32; 3], c: [f32; 3]| Facet { normal: [0.0; 3], vertices: [a, b, c] };
        let facets = [
            f([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            f([1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0000001, 0.0]),
        ];
        let (m, dropped) = weld(&facets, 1e-6);
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(dropped, 0);
    }
}
