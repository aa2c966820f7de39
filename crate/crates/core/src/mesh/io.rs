//! STL (binary and ASCII) and Wavefront OBJ reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{weld_points, TriMesh};
use crate::error::{Result, VcsError};

/// Vertices closer than this (mm) are merged on read.
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

/// Reads an STL or OBJ file, chosen by extension.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| VcsError::Input(format!("{}: {e}", path.display())))?;
    match extension(path).as_deref() {
        Some("obj") => read_obj(&bytes),
        Some("stl") => read_stl(&bytes),
        other => Err(VcsError::Input(format!("unsupported mesh extension {other:?}"))),
    }
}

/// Writes binary STL or OBJ, chosen by extension.
pub fn write_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match extension(path).as_deref() {
        Some("obj") => write_obj(mesh),
        Some("stl") => write_stl(mesh, StlFormat::Binary),
        other => return Err(VcsError::Input(format!("unsupported mesh extension {other:?}"))),
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

fn extension(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase())
}

pub fn read_stl(bytes: &[u8]) -> Result<TriMesh> {
    let soup = if is_binary_stl(bytes) { parse_binary_stl(bytes)? } else { parse_ascii_stl(bytes)? };
    from_soup(soup)
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + 50 * n
}

fn from_soup(soup: Vec<[Point3<f64>; 3]>) -> Result<TriMesh> {
    if soup.is_empty() {
        return Err(VcsError::Input("mesh has no triangles".into()));
    }
    let flat: Vec<Point3<f64>> = soup.iter().flatten().copied().collect();
    let (vertices, remap) = weld_points(&flat, WELD_TOLERANCE);
    let faces = remap
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
        .collect();
    TriMesh::new(vertices, faces)
}

fn parse_binary_stl(bytes: &[u8]) -> Result<Vec<[Point3<f64>; 3]>> {
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + 50 * t;
        let read = |k: usize| -> Result<f64> {
            let o = base + 12 + 4 * k;
            let v = f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(VcsError::Parse { offset: o, message: "non-finite coordinate".into() })
            }
        };
        let mut tri = [Point3::origin(); 3];
        for (v, p) in tri.iter_mut().enumerate() {
            *p = Point3::new(read(3 * v)?, read(3 * v + 1)?, read(3 * v + 2)?);
        }
        out.push(tri);
    }
    Ok(out)
}

/// Whitespace tokenizer that remembers byte offsets for error messages.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let start = self.pos + (rest.len() - rest.trim_start().len());
        let rest = &self.text[start..];
        if rest.is_empty() {
            self.pos = self.text.len();
            return None;
        }
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        self.pos = start + len;
        Some((start, &rest[..len]))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        match self.next() {
            Some((_, w)) if w.eq_ignore_ascii_case(word) => Ok(()),
            Some((o, w)) => Err(VcsError::Parse { offset: o, message: format!("expected '{word}', found '{w}'") }),
            None => Err(VcsError::Parse { offset: self.text.len(), message: format!("expected '{word}', found end of file") }),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next() {
            Some((o, w)) => match w.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(VcsError::Parse { offset: o, message: format!("invalid number '{w}'") }),
            },
            None => Err(VcsError::Parse { offset: self.text.len(), message: "expected number, found end of file".into() }),
        }
    }
}

fn parse_ascii_stl(bytes: &[u8]) -> Result<Vec<[Point3<f64>; 3]>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| VcsError::Parse { offset: e.valid_up_to(), message: "STL is neither binary nor UTF-8 text".into() })?;
    let mut tok = Tokens { text, pos: 0 };
    tok.expect("solid")?;
    // optional solid name runs to end of line
    let line_end = text[tok.pos..].find('\n').map_or(text.len(), |i| tok.pos + i);
    tok.pos = line_end;
    let mut out = Vec::new();
    loop {
        match tok.next() {
            Some((_, w)) if w.eq_ignore_ascii_case("facet") => {
                tok.expect("normal")?;
                for _ in 0..3 {
                    tok.number()?;
                }
                tok.expect("outer")?;
                tok.expect("loop")?;
                let mut tri = [Point3::origin(); 3];
                for p in tri.iter_mut() {
                    tok.expect("vertex")?;
                    *p = Point3::new(tok.number()?, tok.number()?, tok.number()?);
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
                out.push(tri);
            }
            Some((_, w)) if w.eq_ignore_ascii_case("endsolid") => break,
            Some((o, w)) => return Err(VcsError::Parse { offset: o, message: format!("unexpected token '{w}'") }),
            None => return Err(VcsError::Parse { offset: text.len(), message: "missing 'endsolid'".into() }),
        }
    }
    Ok(out)
}

fn facet_normal(t: &[Point3<f64>; 3]) -> [f32; 3] {
    let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
    let n = if n.norm() > 0.0 { n.normalize() } else { n };
    [n.x as f32, n.y as f32, n.z as f32]
}

pub fn write_stl(mesh: &TriMesh, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => {
            let mut out = Vec::with_capacity(84 + 50 * mesh.faces.len());
            let mut header = [0u8; 80];
            let tag = b"binary STL written by vessel-coords";
            header[..tag.len()].copy_from_slice(tag);
            out.extend_from_slice(&header);
            out.extend_from_slice(&(mesh.faces.len() as u32).to_le_bytes());
            for f in 0..mesh.faces.len() {
                let tri = mesh.triangle(f);
                for c in facet_normal(&tri) {
                    out.extend_from_slice(&c.to_le_bytes());
                }
                for p in &tri {
                    for k in 0..3 {
                        out.extend_from_slice(&(p[k] as f32).to_le_bytes());
                    }
                }
                out.extend_from_slice(&[0, 0]);
            }
            out
        }
        StlFormat::Ascii => {
            let mut s = String::from("solid vessel\n");
            for f in 0..mesh.faces.len() {
                let tri = mesh.triangle(f);
                let n = facet_normal(&tri);
                s.push_str(&format!("  facet normal {} {} {}\n    outer loop\n", n[0], n[1], n[2]));
                for p in &tri {
                    s.push_str(&format!("      vertex {} {} {}\n", p.x as f32, p.y as f32, p.z as f32));
                }
                s.push_str("    endloop\n  endfacet\n");
            }
            s.push_str("endsolid vessel\n");
            s.into_bytes()
        }
    }
}

pub fn read_obj(bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| VcsError::Parse { offset: e.valid_up_to(), message: "OBJ is not UTF-8".into() })?;
    let mut vertices = Vec::new();
    let mut polygons: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.split('#').next().unwrap_or("");
        let mut tok = Tokens { text: content, pos: 0 };
        let Some((_, head)) = tok.next() else { continue };
        match head {
            "v" => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    *c = tok.number().map_err(|e| shift(e, start))?;
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                while let Some((o, w)) = tok.next() {
                    let first = w.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| VcsError::Parse { offset: start + o, message: format!("invalid face index '{w}'") })?;
                    idx.push(i);
                }
                if idx.len() < 3 {
                    return Err(VcsError::Parse { offset: start, message: "face with fewer than 3 vertices".into() });
                }
                polygons.push((start, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut soup = Vec::new();
    for (at, poly) in polygons {
        let resolve = |i: i64| -> Result<usize> {
            let r = if i < 0 { n + i } else { i - 1 };
            if (0..n).contains(&r) {
                Ok(r as usize)
            } else {
                Err(VcsError::Parse { offset: at, message: format!("face index {i} out of range") })
            }
        };
        let ids = poly.iter().map(|&i| resolve(i)).collect::<Result<Vec<_>>>()?;
        for k in 1..ids.len() - 1 {
            soup.push([vertices[ids[0]], vertices[ids[k]], vertices[ids[k + 1]]]);
        }
    }
    from_soup(soup)
}

fn shift(e: VcsError, by: usize) -> VcsError {
    match e {
        VcsError::Parse { offset, message } => VcsError::Parse { offset: offset + by, message },
        other => other,
    }
}

pub fn write_obj(mesh: &TriMesh) -> Vec<u8> {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_parse_error_reports_offset() {
        let text = b"solid x\n facet normal 0 0 1\n outer loop\n vertex 0 0 zero\n";
        match read_stl(text) {
            Err(VcsError::Parse { offset, .. }) => assert_eq!(&text[offset..offset + 4], b"zero"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_ascii_solid_is_an_input_error() {
        assert!(matches!(read_stl(b"solid empty\nendsolid empty\n"), Err(VcsError::Input(_))));
    }

    #[test]
    fn obj_polygons_are_fanned() {
        let obj = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 4/4\n";
        let m = read_obj(obj).unwrap();
        assert_eq!(m.faces.len(), 2);
        assert_eq!(m.vertices.len(), 4);
    }

    #[test]
    fn obj_bad_index() {
        let obj = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 9\n";
        assert!(matches!(read_obj(obj), Err(VcsError::Parse { .. })));
    }
}
