use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use crate::atlas::{FieldAtlas, FieldSupport, GridNode, GridSpec, SampledField, ScatteredField};
use crate::coords::VesselCoordinates;
use crate::error::{Result, VcsError};

/// A numeric CSV table. `#` lines before the data are kept as metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    fn require(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.column(n).ok_or_else(|| VcsError::Input(format!("missing column '{n}'"))))
            .collect()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parses CSV text. A first row that is not numeric is taken as the header.
pub fn parse_table(text: &str) -> Result<Table> {
    let mut meta = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if let Some(c) = t.strip_prefix('#') {
            if let Some((k, v)) = c.split_once(':') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !t.is_empty() {
            break;
        }
        offset += line.len();
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(&text.as_bytes()[offset..]);
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| VcsError::Parse {
            offset: offset + e.position().map_or(0, |p| p.byte() as usize),
            message: e.to_string(),
        })?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(parse_number).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = rec.iter().map(str::to_string).collect(),
            Err(field) => {
                return Err(VcsError::Parse {
                    offset: offset + rec.position().map_or(0, |p| p.byte() as usize),
                    message: format!("row {}: '{field}' is not a number", i + 1),
                })
            }
        }
    }
    Ok(Table { header, rows, meta })
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    match s {
        "true" => Ok(1.0),
        "false" => Ok(0.0),
        _ => s.parse::<f64>().map_err(|_| s.to_string()),
    }
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| VcsError::Input(format!("{}: {e}", path.display())))?;
    parse_table(&text)
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

fn fmt(v: f64) -> String {
    // Shortest representation that parses back to the same value.
    format!("{v:?}")
}

/// Reads `x,y,z` rows; without a header the first three columns are used.
pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Point3<f64>>> {
    let t = read_table(path)?;
    let idx = if t.header.is_empty() { vec![0, 1, 2] } else { t.require(&["x", "y", "z"])? };
    t.rows
        .iter()
        .map(|r| {
            if r.len() < 3 {
                return Err(VcsError::Input("point rows need three columns".into()));
            }
            Ok(Point3::new(r[idx[0]], r[idx[1]], r[idx[2]]))
        })
        .collect()
}

pub fn write_points<W: Write>(out: W, points: &[Point3<f64>]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["x", "y", "z"])?;
    for p in points {
        w.write_record([fmt(p.x), fmt(p.y), fmt(p.z)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `tau,theta,rho` rows.
pub fn read_coords(path: impl AsRef<Path>) -> Result<Vec<[f64; 3]>> {
    let t = read_table(path)?;
    let idx = if t.header.is_empty() { vec![0, 1, 2] } else { t.require(&["tau", "theta", "rho"])? };
    t.rows
        .iter()
        .map(|r| {
            if r.len() < 3 {
                return Err(VcsError::Input("coordinate rows need three columns".into()));
            }
            Ok([r[idx[0]], r[idx[1]], r[idx[2]]])
        })
        .collect()
}

pub fn write_coords<W: Write>(out: W, coords: &[VesselCoordinates]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["tau", "theta", "rho", "valid", "boundary", "degenerate"])?;
    for c in coords {
        w.write_record([
            fmt(c.tau),
            fmt(c.theta),
            fmt(c.rho),
            c.valid.to_string(),
            c.boundary.to_string(),
            c.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Column names for a field with `components` entries per point.
pub fn value_columns(name: &str, components: usize) -> Vec<String> {
    match components {
        1 => vec![name.to_string()],
        3 => ["x", "y", "z"].iter().map(|a| format!("{name}_{a}")).collect(),
        n => (0..n).map(|i| format!("{name}_{i}")).collect(),
    }
}

fn field_name(columns: &[String]) -> String {
    match columns {
        [] => "field".into(),
        [one] => one.clone(),
        [first, ..] => first.rsplit_once('_').map_or(first.as_str(), |(a, _)| a).to_string(),
    }
}

/// Reads `x,y,z,v...`; every column after the coordinates is a component.
pub fn read_scattered_field(path: impl AsRef<Path>) -> Result<ScatteredField> {
    let t = read_table(path)?;
    let idx = if t.header.is_empty() { vec![0, 1, 2] } else { t.require(&["x", "y", "z"])? };
    let width = t.rows.first().map_or(t.header.len(), |r| r.len());
    let value_cols: Vec<usize> = (0..width).filter(|c| !idx.contains(c)).collect();
    let name = if t.header.is_empty() {
        "field".to_string()
    } else {
        field_name(&value_cols.iter().map(|&c| t.header[c].clone()).collect::<Vec<_>>())
    };
    let mut points = Vec::with_capacity(t.rows.len());
    let mut values = Vec::with_capacity(t.rows.len() * value_cols.len());
    for r in &t.rows {
        points.push(Point3::new(r[idx[0]], r[idx[1]], r[idx[2]]));
        values.extend(value_cols.iter().map(|&c| r[c]));
    }
    ScatteredField::new(name, t.meta("units").unwrap_or(""), value_cols.len(), points, values)
}

pub fn write_scattered_field<W: Write>(mut out: W, field: &ScatteredField) -> Result<()> {
    writeln!(out, "# units: {}", field.units)?;
    let mut w = writer(out);
    let mut head = vec!["x".to_string(), "y".into(), "z".into()];
    head.extend(value_columns(&field.name, field.components));
    w.write_record(&head)?;
    for (i, p) in field.points.iter().enumerate() {
        let mut row = vec![fmt(p.x), fmt(p.y), fmt(p.z)];
        row.extend(field.value(i).iter().map(|&v| fmt(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_grid_table<W: Write>(
    mut out: W,
    meta: &[(&str, String)],
    nodes: &[&GridNode],
    points: &[Point3<f64>],
    columns: &[(String, &[f64], usize)],
) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = writer(out);
    let mut head: Vec<String> = ["tau", "theta", "rho_n", "x", "y", "z"].iter().map(|s| s.to_string()).collect();
    for (name, _, comps) in columns {
        head.extend(value_columns(name, *comps));
    }
    w.write_record(&head)?;
    for (i, (n, p)) in nodes.iter().zip(points).enumerate() {
        let mut row = vec![fmt(n.tau), fmt(n.theta), fmt(n.rho_n), fmt(p.x), fmt(p.y), fmt(p.z)];
        for (_, vals, comps) in columns {
            row.extend(vals[i * comps..(i + 1) * comps].iter().map(|&v| fmt(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a sampled field keyed by grid node, with the node's position in
/// `points` (one per supported node).
pub fn write_sampled_field<W: Write>(out: W, field: &SampledField, points: &[Point3<f64>]) -> Result<()> {
    let grid = field.grid.build()?;
    let nodes = field.support.nodes(&grid);
    if nodes.len() != points.len() || nodes.len() != field.node_count() {
        return Err(VcsError::Layout("sampled field, grid and points disagree in length".into()));
    }
    let meta = grid_meta(&field.name, &field.units, field.components, field.grid, field.support, Some(field.gaps));
    write_grid_table(out, &meta, &nodes, points, &[(field.name.clone(), &field.values, field.components)])
}

fn grid_meta(name: &str, units: &str, components: usize, g: GridSpec, s: FieldSupport, gaps: Option<usize>) -> Vec<(&'static str, String)> {
    let mut m = vec![
        ("field", name.to_string()),
        ("units", units.to_string()),
        ("components", components.to_string()),
        ("grid", format!("{}x{}x{}", g.n_tau, g.n_theta, g.n_rho)),
        ("support", match s {
            FieldSupport::Volume => "volume".into(),
            FieldSupport::Wall => "wall".into(),
        }),
    ];
    if let Some(g) = gaps {
        m.push(("gaps", g.to_string()));
    }
    m
}

fn meta_value<T: std::str::FromStr>(t: &Table, key: &str) -> Result<T> {
    t.meta(key)
        .ok_or_else(|| VcsError::Input(format!("missing '# {key}:' line")))?
        .parse()
        .map_err(|_| VcsError::Input(format!("bad '# {key}:' value")))
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: std::result::Result<Vec<usize>, _> = s.split('x').map(str::parse).collect();
    match parts.as_deref() {
        Ok([a, b, c]) => Ok(GridSpec { n_tau: *a, n_theta: *b, n_rho: *c }),
        _ => Err(VcsError::Parameter(format!("grid must look like 64x32x8, got '{s}'"))),
    }
}

/// Reads a table written by [`write_sampled_field`] and checks its nodes
/// against the declared grid.
pub fn read_sampled_field(path: impl AsRef<Path>) -> Result<SampledField> {
    let t = read_table(path)?;
    let grid = parse_grid(t.meta("grid").ok_or_else(|| VcsError::Input("missing '# grid:' line".into()))?)
        .map_err(|e| VcsError::Input(e.to_string()))?;
    let support = match t.meta("support") {
        Some("wall") => FieldSupport::Wall,
        Some("volume") | None => FieldSupport::Volume,
        Some(o) => return Err(VcsError::Input(format!("unknown support '{o}'"))),
    };
    let components: usize = meta_value(&t, "components")?;
    let name = t.meta("field").unwrap_or("field").to_string();
    let built = grid.build()?;
    let nodes = support.nodes(&built);
    if t.rows.len() != nodes.len() {
        return Err(VcsError::Layout(format!("expected {} nodes for grid {:?}, found {}", nodes.len(), grid, t.rows.len())));
    }
    let idx = t.require(&["tau", "theta", "rho_n"])?;
    let cols = value_columns(&name, components);
    let vidx = t.require(&cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    let mut values = Vec::with_capacity(nodes.len() * components);
    for (r, n) in t.rows.iter().zip(&nodes) {
        let d = (r[idx[0]] - n.tau).abs() + (r[idx[1]] - n.theta).abs() + (r[idx[2]] - n.rho_n).abs();
        if d > 1e-9 {
            return Err(VcsError::Layout(format!("row at ({}, {}, {}) is out of grid order", r[idx[0]], r[idx[1]], r[idx[2]])));
        }
        values.extend(vidx.iter().map(|&c| r[c]));
    }
    Ok(SampledField {
        name,
        units: t.meta("units").unwrap_or("").to_string(),
        components,
        grid,
        support,
        values,
        gaps: t.meta("gaps").and_then(|g| g.parse().ok()).unwrap_or(0),
    })
}

/// Writes the atlas mean and its modes on the grid materialized at `points`.
pub fn write_atlas_table<W: Write>(out: W, atlas: &FieldAtlas, points: &[Point3<f64>]) -> Result<()> {
    let grid = atlas.grid.build()?;
    let nodes = atlas.support.nodes(&grid);
    if nodes.len() != points.len() {
        return Err(VcsError::Layout("atlas grid and points disagree in length".into()));
    }
    let mut cols = vec![(format!("{}_mean", atlas.name), atlas.pca.mean.as_slice(), atlas.components)];
    for (i, m) in atlas.pca.modes.iter().enumerate() {
        cols.push((format!("{}_mode{}", atlas.name, i + 1), m.as_slice(), atlas.components));
    }
    let mut meta = grid_meta(&atlas.name, &atlas.units, atlas.components, atlas.grid, atlas.support, None);
    meta.push(("variances", atlas.pca.variances.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(" ")));
    write_grid_table(out, &meta, &nodes, points, &cols)
}

/// All numbers in a file, row by row; a header row is skipped.
pub fn read_numbers(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| VcsError::Input(format!("{}: {e}", path.display())))?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let rec = rec.map_err(|e| VcsError::Parse { offset: e.position().map_or(0, |p| p.byte() as usize), message: e.to_string() })?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().filter(|s| !s.is_empty()).map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => out.extend(v),
            Err(_) if i == 0 => {}
            Err(e) => {
                return Err(VcsError::Parse { offset: rec.position().map_or(0, |p| p.byte() as usize), message: e.to_string() })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_header_and_meta() {
        let t = parse_table("# units: Pa\n# note\nx,y,z,p\n0,1,2,3.5\n1,1,1,-2e-3\n").unwrap();
        assert_eq!(t.header, vec!["x", "y", "z", "p"]);
        assert_eq!(t.meta("units"), Some("Pa"));
        assert_eq!(t.rows[1], vec![1.0, 1.0, 1.0, -2e-3]);
    }

    #[test]
    fn table_without_header() {
        let t = parse_table("1,2,3\n4,5,6\n").unwrap();
        assert!(t.header.is_empty());
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn bad_number_reports_offset() {
        let err = parse_table("x,y,z\n1,2,3\n4,five,6\n").unwrap_err();
        assert!(matches!(err, VcsError::Parse { offset: 12, .. }), "{err:?}");
    }

    #[test]
    fn floats_round_trip_through_text() {
        let pts = vec![Point3::new(0.1, 1.0 / 3.0, -1e-300), Point3::new(f64::MAX, 2.5, std::f64::consts::PI)];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts).unwrap();
        let t = parse_table(std::str::from_utf8(&buf).unwrap()).unwrap();
        let back: Vec<Point3<f64>> = t.rows.iter().map(|r| Point3::new(r[0], r[1], r[2])).collect();
        assert_eq!(back, pts);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("64x32x8").unwrap(), GridSpec { n_tau: 64, n_theta: 32, n_rho: 8 });
        assert!(parse_grid("64x32").is_err());
    }
}
