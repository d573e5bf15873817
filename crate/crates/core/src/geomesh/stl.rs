//! STL reading and writing, binary and ASCII.
//!
//! Binary layout: 80-byte header, little-endian `u32` triangle count, then one
//! 50-byte record per triangle (normal, three vertices, all `f32`, plus a `u16`
//! attribute word). Stored normals are ignored on read and recomputed on write.
//!
//! A file is read as ASCII only when it starts with `solid` (any case) *and*
//! the ASCII grammar accepts it; otherwise it is read as binary.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use super::{Point, TriangleMesh};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("empty input")]
    EmptyInput,
    #[error("truncated file: header declares {declared} triangles ({expected} bytes) but file has {actual} bytes")]
    TruncatedFile {
        declared: u64,
        expected: u64,
        actual: u64,
    },
    #[error("ASCII STL syntax error at line {line}: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

/// A parsed mesh plus what the parser had to discard.
#[derive(Debug, Clone)]
pub struct StlParse {
    pub mesh: TriangleMesh,
    pub format: StlFormat,
    pub degenerate_dropped: usize,
}

pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, StlError> {
    parse_stl_report(bytes).map(|r| r.mesh)
}

/// Parses and welds bit-identical vertices. Triangles with repeated positions or
/// zero area are dropped and counted.
pub fn parse_stl_report(bytes: &[u8]) -> Result<StlParse, StlError> {
    let (name, facets, format) = parse_facets_named(bytes)?;
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(facets.len());
    let mut dropped = 0usize;
    for facet in &facets {
        if is_degenerate(&facet.map(to_point)) {
            dropped += 1;
            continue;
        }
        let mut tri = [0u32; 3];
        for (slot, v) in tri.iter_mut().zip(facet) {
            let key = v.map(|c| if c == 0.0 { 0u32 } else { c.to_bits() });
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(to_point(*v));
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(tri);
    }
    if dropped > 0 {
        log::warn!("STL '{name}': dropped {dropped} degenerate triangles");
    }
    let mesh = TriangleMesh::new(name, vertices, triangles)
        .expect("welded triangles are index-valid and non-degenerate");
    Ok(StlParse {
        mesh,
        format,
        degenerate_dropped: dropped,
    })
}

/// Raw facet list in file order, without welding or degenerate filtering.
/// Used for animation frames, which must keep a fixed facet order.
pub fn parse_stl_facets(bytes: &[u8]) -> Result<Vec<[Point; 3]>, StlError> {
    let (_, facets, _) = parse_facets_named(bytes)?;
    Ok(facets.iter().map(|f| f.map(to_point)).collect())
}

pub fn read_stl_file(path: impl AsRef<Path>) -> Result<TriangleMesh, StlError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| StlError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut mesh = parse_stl(&bytes)?;
    if mesh.name().is_empty() {
        if let Some(stem) = path.file_stem() {
            mesh.set_name(stem.to_string_lossy());
        }
    }
    Ok(mesh)
}

pub(crate) fn is_degenerate(tri: &[Point; 3]) -> bool {
    let e0 = tri[1] - tri[0];
    let e1 = tri[2] - tri[0];
    let e2 = tri[2] - tri[1];
    let longest = e0.norm_squared().max(e1.norm_squared()).max(e2.norm_squared());
    longest == 0.0 || e0.cross(&e1).norm() <= 1e-12 * longest
}

fn to_point(v: [f32; 3]) -> Point {
    Point::new(v[0] as f64, v[1] as f64, v[2] as f64)
}

type RawFacet = [[f32; 3]; 3];

fn parse_facets_named(bytes: &[u8]) -> Result<(String, Vec<RawFacet>, StlFormat), StlError> {
    if bytes.is_empty() {
        return Err(StlError::EmptyInput);
    }
    let looks_ascii = bytes.len() >= 5 && bytes[..5].eq_ignore_ascii_case(b"solid");
    if looks_ascii {
        match parse_ascii(bytes) {
            Ok((name, facets)) => return Ok((name, facets, StlFormat::Ascii)),
            Err(ascii_err) => {
                // Binary files whose header happens to start with "solid" are
                // common; only fall back when the binary size checks out.
                return match parse_binary(bytes) {
                    Ok((name, facets)) => Ok((name, facets, StlFormat::Binary)),
                    Err(_) => Err(ascii_err),
                };
            }
        }
    }
    let (name, facets) = parse_binary(bytes)?;
    Ok((name, facets, StlFormat::Binary))
}

fn parse_binary(bytes: &[u8]) -> Result<(String, Vec<RawFacet>), StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::TruncatedFile {
            declared: 0,
            expected: (HEADER_LEN + 4) as u64,
            actual: bytes.len() as u64,
        });
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as u64;
    let expected = (HEADER_LEN as u64 + 4) + count * RECORD_LEN as u64;
    if (bytes.len() as u64) < expected {
        return Err(StlError::TruncatedFile {
            declared: count,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let header = String::from_utf8_lossy(&bytes[..HEADER_LEN]);
    let name = header.trim_matches(|c: char| c == '\0' || c.is_whitespace()).to_string();
    let body = &bytes[HEADER_LEN + 4..expected as usize];
    let facets = body
        .chunks_exact(RECORD_LEN)
        .map(|rec| {
            let f = |i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap());
            // floats 0..3 are the stored normal
            [[f(3), f(4), f(5)], [f(6), f(7), f(8)], [f(9), f(10), f(11)]]
        })
        .collect();
    Ok((name, facets))
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum AsciiState {
    Outside,
    InSolid,
    InFacet,
    InLoop(usize),
    LoopDone,
}

fn parse_ascii(bytes: &[u8]) -> Result<(String, Vec<RawFacet>), StlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| StlError::SyntaxError {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut state = AsciiState::Outside;
    let mut name = String::new();
    let mut facets = Vec::new();
    let mut current: RawFacet = [[0.0; 3]; 3];
    let mut solids = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let err = |message: String| StlError::SyntaxError { line, message };
        let mut tokens = raw.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        let keyword = keyword.to_ascii_lowercase();
        state = match (state, keyword.as_str()) {
            (AsciiState::Outside, "solid") => {
                if solids == 0 {
                    name = tokens.by_ref().collect::<Vec<_>>().join(" ");
                }
                solids += 1;
                AsciiState::InSolid
            }
            (AsciiState::InSolid, "endsolid") => AsciiState::Outside,
            (AsciiState::InSolid, "facet") => {
                match tokens.next() {
                    Some(t) if t.eq_ignore_ascii_case("normal") => {}
                    _ => return Err(err("expected 'facet normal'".into())),
                }
                parse_triple(&mut tokens).map_err(|m| err(format!("facet normal: {m}")))?;
                AsciiState::InFacet
            }
            (AsciiState::InFacet, "outer") => {
                match tokens.next() {
                    Some(t) if t.eq_ignore_ascii_case("loop") => {}
                    _ => return Err(err("expected 'outer loop'".into())),
                }
                AsciiState::InLoop(0)
            }
            (AsciiState::InLoop(n), "vertex") if n < 3 => {
                current[n] = parse_triple(&mut tokens).map_err(|m| err(format!("vertex: {m}")))?;
                AsciiState::InLoop(n + 1)
            }
            (AsciiState::InLoop(3), "endloop") => AsciiState::LoopDone,
            (AsciiState::LoopDone, "endfacet") => {
                facets.push(current);
                AsciiState::InSolid
            }
            (s, k) => return Err(err(format!("unexpected '{k}' (state {s:?})"))),
        };
        if let Some(extra) = tokens.next() {
            if !matches!(keyword.as_str(), "solid" | "endsolid") {
                return Err(err(format!("trailing token '{extra}'")));
            }
        }
    }
    if state != AsciiState::Outside || solids == 0 {
        let line = text.lines().count().max(1);
        return Err(StlError::SyntaxError {
            line,
            message: "unexpected end of file (missing endsolid)".into(),
        });
    }
    Ok((name, facets))
}

fn parse_triple<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<[f32; 3], String> {
    let mut out = [0f32; 3];
    for slot in &mut out {
        let tok = tokens.next().ok_or("expected three numbers")?;
        *slot = tok.parse::<f32>().map_err(|_| format!("bad number '{tok}'"))?;
        if !slot.is_finite() {
            return Err(format!("non-finite number '{tok}'"));
        }
    }
    Ok(out)
}

fn facet_f32(mesh: &TriangleMesh, i: usize) -> ([f32; 3], [[f32; 3]; 3]) {
    let tri = mesh.triangle(i);
    let n = mesh.normal(i);
    let v = tri.map(|p| [p.x as f32, p.y as f32, p.z as f32]);
    ([n.x as f32, n.y as f32, n.z as f32], v)
}

pub fn write_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.triangle_count());
    let mut header = [0u8; HEADER_LEN];
    // a binary header must not begin with "solid"
    let label = if mesh.name().len() >= 5 && mesh.name()[..5].eq_ignore_ascii_case("solid") {
        format!("mesh {}", mesh.name())
    } else {
        mesh.name().to_string()
    };
    let n = label.len().min(HEADER_LEN);
    header[..n].copy_from_slice(&label.as_bytes()[..n]);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for i in 0..mesh.triangle_count() {
        let (normal, verts) = facet_f32(mesh, i);
        for c in normal.iter().chain(verts.iter().flatten()) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

pub fn write_ascii_stl(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let name = mesh.name().replace(char::is_whitespace, "_");
    let mut s = format!("solid {name}\n");
    for i in 0..mesh.triangle_count() {
        let (n, verts) = facet_f32(mesh, i);
        let _ = writeln!(s, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2]);
        s.push_str("    outer loop\n");
        for v in verts {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v[0], v[1], v[2]);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle_binary(declared: u32, records: usize) -> Vec<u8> {
        let mut b = vec![0u8; 80];
        b.extend_from_slice(&declared.to_le_bytes());
        for _ in 0..records {
            let vals: [f32; 12] = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
            for v in vals {
                b.extend_from_slice(&v.to_le_bytes());
            }
            b.extend_from_slice(&[0, 0]);
        }
        b
    }

    const ONE_FACET: &str = "solid a\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid a\n";

    #[test]
    fn binary_single_triangle() {
        let r = parse_stl_report(&one_triangle_binary(1, 1)).unwrap();
        assert_eq!(r.format, StlFormat::Binary);
        assert_eq!(r.mesh.vertices().len(), 3);
        assert_eq!(r.mesh.triangle_count(), 1);
        assert_eq!(r.mesh.triangle(0)[1], Point::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn ascii_matches_binary() {
        let a = parse_stl_report(ONE_FACET.as_bytes()).unwrap();
        assert_eq!(a.format, StlFormat::Ascii);
        assert_eq!(a.mesh.name(), "a");
        let b = parse_stl(&one_triangle_binary(1, 1)).unwrap();
        assert_eq!(a.mesh.vertices(), b.vertices());
        assert_eq!(a.mesh.triangles(), b.triangles());
    }

    #[test]
    fn truncated_binary() {
        let err = parse_stl(&one_triangle_binary(10, 3)).unwrap_err();
        assert!(matches!(err, StlError::TruncatedFile { declared: 10, .. }), "{err:?}");
        assert!(matches!(parse_stl(&[1u8; 20]), Err(StlError::TruncatedFile { .. })));
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_stl(&[]).unwrap_err(), StlError::EmptyInput);
    }

    #[test]
    fn ascii_syntax_error_reports_line() {
        let bad = ONE_FACET.replace("   vertex 1 0 0", "   vertex 1 zero 0");
        match parse_stl(bad.as_bytes()).unwrap_err() {
            StlError::SyntaxError { line, .. } => assert_eq!(line, 5),
            e => panic!("unexpected {e:?}"),
        }
        let missing_end = ONE_FACET.replace("endsolid a\n", "");
        assert!(matches!(
            parse_stl(missing_end.as_bytes()),
            Err(StlError::SyntaxError { .. })
        ));
    }

    #[test]
    fn binary_header_starting_with_solid() {
        let mut b = one_triangle_binary(1, 1);
        b[..5].copy_from_slice(b"solid");
        let r = parse_stl_report(&b).unwrap();
        assert_eq!(r.format, StlFormat::Binary);
        assert_eq!(r.mesh.triangle_count(), 1);
    }

    #[test]
    fn degenerate_triangles_dropped() {
        let text = "solid d\nfacet normal 0 0 0\nouter loop\nvertex 0 0 0\nvertex 1 1 1\nvertex 2 2 2\nendloop\nendfacet\n\
                    facet normal 0 0 0\nouter loop\nvertex 0 0 0\nvertex 0 0 0\nvertex 1 0 0\nendloop\nendfacet\nendsolid d\n";
        let with_good = text.replace("endsolid d", &ONE_FACET["solid a\n".len()..ONE_FACET.len() - "endsolid a\n".len()]) + "endsolid d\n";
        let r = parse_stl_report(with_good.as_bytes()).unwrap();
        assert_eq!(r.degenerate_dropped, 2);
        assert_eq!(r.mesh.triangle_count(), 1);
    }

    #[test]
    fn shared_vertices_are_welded() {
        let quad = TriangleMesh::new(
            "q",
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let back = parse_stl(&write_binary_stl(&quad)).unwrap();
        assert_eq!(back.vertices().len(), 4);
        assert_eq!(back, quad);
        let ascii = parse_stl(write_ascii_stl(&quad).as_bytes()).unwrap();
        assert_eq!(ascii.vertices(), quad.vertices());
    }
}
