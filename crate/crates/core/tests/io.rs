use nalgebra::{Point3, Vector3};
use tempfile::tempdir;
use vessel_coords::atlas::{build_grid, field_pca, materialize, sample_field, FieldSupport, ScatteredField};
use vessel_coords::cohort::shape_pca;
use vessel_coords::coords::VcsContext;
use vessel_coords::io::{
    file_sha256, from_json, read_json, read_model, read_sampled_field, read_scattered_field, read_vtk, to_json,
    write_json, write_model, write_sampled_field, write_scattered_field, AtlasDocument, CohortDocument, ModelDocument,
    ReadMode,
};
use vessel_coords::mesh::{read_mesh, read_obj, read_stl, write_mesh, write_obj, write_stl, StlFormat, TriMesh};
use vessel_coords::model::{fit_model, ModelDims, VesselModel};
use vessel_coords::splines::fit_curve;
use vessel_coords::synthetic::{CenterlineShape, SyntheticSpec};
use vessel_coords::VcsError;

fn tube() -> TriMesh {
    SyntheticSpec::tube(CenterlineShape::Arc { radius: 40.0, angle: 1.0 }, 6.0).with_density(30, 16).generate().unwrap().0
}

fn model() -> VesselModel {
    let spec = SyntheticSpec::tube(CenterlineShape::Line { length: 40.0 }, 5.0).with_density(40, 24);
    let (mesh, oracle) = spec.generate().unwrap();
    let curve = fit_curve(&oracle.centerline_samples(101), 5).unwrap();
    let ctx = VcsContext::new(&curve, &oracle.v1_0()).unwrap();
    fit_model(&mesh, &ctx, ModelDims::new(5, 7, 7)).unwrap()
}

fn same_shape(a: &TriMesh, b: &TriMesh, tol: f64) {
    assert_eq!(a.vertices.len(), b.vertices.len());
    assert_eq!(a.faces.len(), b.faces.len());
    for f in 0..a.faces.len() {
        for (p, q) in a.triangle(f).iter().zip(b.triangle(f).iter()) {
            assert!((p - q).norm() < tol, "face {f}: {p:?} vs {q:?}");
        }
    }
}

#[test]
fn stl_round_trips_keep_topology() {
    let mesh = tube();
    for format in [StlFormat::Binary, StlFormat::Ascii] {
        let back = read_stl(&write_stl(&mesh, format)).unwrap();
        same_shape(&mesh, &back, 1e-4);
        assert_eq!(back.boundary_loops().unwrap().len(), 2);
        assert_eq!(back.euler_characteristic(), 0);
    }
}

#[test]
fn obj_round_trip_keeps_positions() {
    let mesh = tube();
    let back = read_obj(&write_obj(&mesh)).unwrap();
    same_shape(&mesh, &back, 1e-12);
}

#[test]
fn mesh_files_by_extension() {
    let dir = tempdir().unwrap();
    let mesh = tube();
    let stl = dir.path().join("nested/wall.stl");
    write_mesh(&mesh, &stl).unwrap();
    same_shape(&mesh, &read_mesh(&stl).unwrap(), 1e-4);
    let obj = dir.path().join("wall.OBJ");
    write_mesh(&mesh, &obj).unwrap();
    same_shape(&mesh, &read_mesh(&obj).unwrap(), 1e-12);
    assert!(matches!(write_mesh(&mesh, dir.path().join("wall.ply")), Err(VcsError::Input(_))));
    assert!(matches!(read_mesh(dir.path().join("missing.stl")), Err(VcsError::Input(_))));
}

#[test]
fn model_file_round_trip_is_bit_exact() {
    let dir = tempdir().unwrap();
    let m = model();
    let path = dir.path().join("models/m.json");
    write_model(&m, &path).unwrap();
    let back = read_model(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.to_feature_vector().values, m.to_feature_vector().values);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(to_json(&ModelDocument::from_model(&back)).unwrap(), text);
}

#[test]
fn strict_and_lenient_reading() {
    let doc = ModelDocument::from_model(&model());
    let mut value: serde_json::Value = serde_json::from_str(&to_json(&doc).unwrap()).unwrap();
    value["centerline"]["color"] = "red".into();
    let text = value.to_string();
    let err = from_json::<ModelDocument>(&text, ReadMode::Strict).unwrap_err();
    assert!(err.to_string().contains("centerline.color"), "{err}");
    assert_eq!(from_json::<ModelDocument>(&text, ReadMode::Lenient).unwrap(), doc);

    value["schema_version"] = 99.into();
    let err = from_json::<ModelDocument>(&value.to_string(), ReadMode::Lenient).unwrap_err();
    assert!(matches!(err, VcsError::SchemaVersion { found: 99, .. }));

    let err = from_json::<ModelDocument>("{\"schema_version\": 1,", ReadMode::Strict).unwrap_err();
    assert!(matches!(err, VcsError::Parse { .. }));
}

#[test]
fn model_document_dims_are_checked() {
    let mut doc = ModelDocument::from_model(&model());
    doc.wall.coefficients.pop();
    assert!(doc.to_model().is_err());
}

#[test]
fn cohort_and_atlas_documents_round_trip() {
    let dir = tempdir().unwrap();
    let base = model();
    let fv = base.to_feature_vector();
    let vectors: Vec<_> = (0..4)
        .map(|i| {
            let mut v = fv.clone();
            let n = v.values.len();
            v.values[n - 1 - i] += 0.1 * (i as f64 + 1.0);
            v
        })
        .collect();
    let cohort = shape_pca(&vectors, base.v1_0()).unwrap();
    let path = dir.path().join("cohort.json");
    write_json(&CohortDocument::from_cohort(&cohort), &path).unwrap();
    let back: CohortDocument = read_json(&path, ReadMode::Strict).unwrap();
    assert_eq!(back.to_cohort().unwrap(), cohort);

    let pts: Vec<_> = (0..200).map(|i| Point3::new((i % 5) as f64 - 2.0, ((i / 5) % 5) as f64 - 2.0, (i / 25) as f64 * 5.0)).collect();
    let g = build_grid(4, 6, 2).unwrap();
    let fields: Vec<_> = (1..=3)
        .map(|s| {
            let values = pts.iter().map(|p| s as f64 * p.z + p.x * p.x).collect();
            sample_field(&ScatteredField::new("p", "Pa", 1, pts.clone(), values).unwrap(), &g, &base, FieldSupport::Volume).unwrap()
        })
        .collect();
    let atlas = field_pca(&fields).unwrap();
    let path = dir.path().join("atlas.json");
    write_json(&AtlasDocument::from_atlas(&atlas), &path).unwrap();
    let back: AtlasDocument = read_json(&path, ReadMode::Strict).unwrap();
    assert_eq!(back.to_atlas(), atlas);
}

#[test]
fn field_tables_round_trip() {
    let dir = tempdir().unwrap();
    let pts: Vec<_> = (0..50).map(|i| Point3::new(0.1 * i as f64, (i % 7) as f64 / 3.0, 1e-7 * i as f64)).collect();
    let values: Vec<f64> = (0..150).map(|i| (i as f64).sin()).collect();
    let field = ScatteredField::new("u", "m/s", 3, pts, values).unwrap();
    let path = dir.path().join("u.csv");
    write_scattered_field(std::fs::File::create(&path).unwrap(), &field).unwrap();
    assert_eq!(read_scattered_field(&path).unwrap(), field);

    let m = model();
    let g = build_grid(5, 6, 3).unwrap();
    let sampled = sample_field(&field, &g, &m, FieldSupport::Volume).unwrap();
    let nodes = materialize(&g, &m).unwrap();
    let path = dir.path().join("sampled.csv");
    write_sampled_field(std::fs::File::create(&path).unwrap(), &sampled, &nodes).unwrap();
    assert_eq!(read_sampled_field(&path).unwrap(), sampled);

    // a row out of grid order is rejected
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let first = lines.iter().position(|l| l.starts_with("0.0,")).unwrap();
    lines.swap(first, first + 1);
    std::fs::write(&path, lines.join("\n")).unwrap();
    assert!(matches!(read_sampled_field(&path), Err(VcsError::Layout(_))));
}

#[test]
fn vtk_point_data() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("flow.vtk");
    let text = "# vtk DataFile Version 3.0\nflow\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS 2 double\n0 0 0\n1 2 3\n\
                CELLS 0 0\nCELL_TYPES 0\nPOINT_DATA 2\nFIELD FieldData 2\npressure 1 2 double\n10 20\n\
                velocity 3 2 double\n1 0 0 0 3 4\n";
    std::fs::write(&path, text).unwrap();
    let p = read_vtk(&path, Some("pressure")).unwrap();
    assert_eq!(p.values, vec![10.0, 20.0]);
    let v = read_vtk(&path, Some("velocity")).unwrap();
    assert_eq!(v.components, 3);
    assert_eq!(v.points[1], Point3::new(1.0, 2.0, 3.0));
    assert_eq!(v.magnitude().values, vec![1.0, 5.0]);
    assert!(read_vtk(&path, Some("wss")).is_err());
}

#[test]
fn sha256_of_known_content() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("abc.txt");
    std::fs::write(&path, "abc").unwrap();
    assert_eq!(file_sha256(&path).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

#[test]
fn translated_mesh_keeps_area() {
    let mesh = tube();
    let moved = mesh.map_vertices(|p| p + Vector3::new(5.0, -3.0, 2.0));
    assert!((mesh.area() - moved.area()).abs() < 1e-9 * mesh.area());
}
