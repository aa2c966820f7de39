//! Reader for ASCII legacy VTK files carrying point data.

use std::path::Path;

use nalgebra::Point3;

use crate::atlas::ScatteredField;
use crate::error::{Result, VcsError};

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let len = rest[start..].find(char::is_whitespace).unwrap_or(rest.len() - start);
        let at = self.pos + start;
        self.pos = at + len;
        Some((at, &self.text[at..at + len]))
    }

    fn expect(&mut self) -> Result<(usize, &'a str)> {
        self.next().ok_or(VcsError::Parse { offset: self.text.len(), message: "unexpected end of file".into() })
    }

    fn number<T: std::str::FromStr>(&mut self) -> Result<T> {
        let (at, t) = self.expect()?;
        t.parse().map_err(|_| VcsError::Parse { offset: at, message: format!("expected a number, found '{t}'") })
    }

    fn skip_line(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.find('\n').map_or(rest.len(), |i| i + 1);
    }
}

/// Reads the point array named `array`, or the first point array when `None`.
/// Scalars keep their component count; vectors have three.
pub fn parse_vtk(text: &str, array: Option<&str>) -> Result<ScatteredField> {
    let mut lines = text.lines();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(VcsError::Parse { offset: 0, message: "not a legacy VTK file".into() });
    }
    let _title = lines.next();
    let format_line = lines.next().unwrap_or("").trim();
    if !format_line.eq_ignore_ascii_case("ASCII") {
        return Err(VcsError::Input(format!("only ASCII legacy VTK is supported, found '{format_line}'")));
    }
    let header_len: usize = text.split_inclusive('\n').take(3).map(str::len).sum();
    let mut tk = Tokens { text, pos: header_len };
    let mut points: Option<Vec<Point3<f64>>> = None;
    let mut n_point_data = None;
    while let Some((at, word)) = tk.next() {
        match word.to_ascii_uppercase().as_str() {
            "POINTS" => {
                let n: usize = tk.number()?;
                tk.expect()?;
                let mut p = Vec::with_capacity(n);
                for _ in 0..n {
                    p.push(Point3::new(tk.number()?, tk.number()?, tk.number()?));
                }
                points = Some(p);
            }
            "POINT_DATA" => n_point_data = Some(tk.number::<usize>()?),
            "CELL_DATA" => break,
            "SCALARS" | "VECTORS" | "NORMALS" if n_point_data.is_some() => {
                let n = n_point_data.unwrap_or(0);
                let (_, name) = tk.expect()?;
                tk.expect()?;
                let comps = if word.eq_ignore_ascii_case("SCALARS") {
                    let rest = text[tk.pos..].lines().next().unwrap_or("").trim();
                    let c = if rest.is_empty() { 1 } else { tk.number()? };
                    let (_, lt) = tk.expect()?;
                    if !lt.eq_ignore_ascii_case("LOOKUP_TABLE") {
                        return Err(VcsError::Parse { offset: tk.pos, message: "expected LOOKUP_TABLE".into() });
                    }
                    tk.expect()?;
                    c
                } else {
                    3
                };
                let mut values = Vec::with_capacity(n * comps);
                for _ in 0..n * comps {
                    values.push(tk.number()?);
                }
                if array.is_none_or(|a| a == name) {
                    let points = points.ok_or(VcsError::Parse { offset: at, message: "point data before POINTS".into() })?;
                    if points.len() != n {
                        return Err(VcsError::Input(format!("{} points but POINT_DATA {n}", points.len())));
                    }
                    return ScatteredField::new(name, "", comps, points, values);
                }
            }
            "FIELD" if n_point_data.is_some() => {
                let (_, _) = tk.expect()?;
                let n_arrays: usize = tk.number()?;
                for _ in 0..n_arrays {
                    let (at, name) = tk.expect()?;
                    let comps: usize = tk.number()?;
                    let tuples: usize = tk.number()?;
                    tk.expect()?;
                    let mut values = Vec::with_capacity(tuples * comps);
                    for _ in 0..tuples * comps {
                        values.push(tk.number()?);
                    }
                    if array.is_none_or(|a| a == name) {
                        let points = points.ok_or(VcsError::Parse { offset: at, message: "point data before POINTS".into() })?;
                        return ScatteredField::new(name, "", comps, points, values);
                    }
                }
            }
            _ => tk.skip_line(),
        }
    }
    Err(VcsError::Input(match array {
        Some(a) => format!("no point array named '{a}'"),
        None => "no point data".into(),
    }))
}

pub fn read_vtk(path: impl AsRef<Path>, array: Option<&str>) -> Result<ScatteredField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| VcsError::Input(format!("{}: {e}", path.display())))?;
    parse_vtk(&text, array)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# vtk DataFile Version 3.0\nflow\nASCII\nDATASET POLYDATA\nPOINTS 3 float\n0 0 0 1 0 0\n0 1 0\nVERTICES 1 4\n3 0 1 2\nPOINT_DATA 3\nSCALARS p float\nLOOKUP_TABLE default\n1.5 2.5 3.5\nVECTORS u double\n1 0 0 0 1 0 0 0 1\n";

    #[test]
    fn reads_first_array() {
        let f = parse_vtk(SAMPLE, None).unwrap();
        assert_eq!(f.name, "p");
        assert_eq!(f.components, 1);
        assert_eq!(f.values, vec![1.5, 2.5, 3.5]);
        assert_eq!(f.points[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn reads_named_vector_array() {
        let f = parse_vtk(SAMPLE, Some("u")).unwrap();
        assert_eq!(f.components, 3);
        assert_eq!(f.value(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn missing_array_and_binary_are_errors() {
        assert!(parse_vtk(SAMPLE, Some("wss")).is_err());
        assert!(parse_vtk(&SAMPLE.replace("ASCII", "BINARY"), None).is_err());
    }
}
