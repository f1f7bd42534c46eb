use std::collections::VecDeque;

use anvil_core::config::{DomainScale, MeshSpec, QualityThresholds};
use anvil_core::geometry::{instantiate_winged, ParameterTable, Segments, TriMesh, WingedBodyParams};
use anvil_core::mesh::{
    auto_mesh, castellate, quality_check, write_vtk, DomainBox, FailureCode, HexMesh, InsideClassifier, MeshError,
    MeshStage, Patch,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_block(n: usize) -> HexMesh {
    HexMesh::block_mesh(DomainBox::new([0.0; 3], [1.0; 3]), [n, n, n])
}

fn sphere_mesh(levels: u32) -> (HexMesh, TriMesh) {
    let body = TriMesh::uv_sphere([0.5, 0.5, 0.5], 0.25, 64, 32);
    let m = castellate(&unit_block(20), &body, levels).unwrap();
    (m, body)
}

/// Generalized winding number by summing signed solid angles.
fn winding_number(mesh: &TriMesh, p: [f64; 3]) -> f64 {
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t).map(|v| [v[0] - p[0], v[1] - p[1], v[2] - p[2]]);
        let len = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        let triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]);
        let (la, lb, lc) = (len(a), len(b), len(c));
        let denom = la * lb * lc + dot(a, b) * lc + dot(a, c) * lb + dot(b, c) * la;
        total += 2.0 * triple.atan2(denom);
    }
    total / (4.0 * std::f64::consts::PI)
}

fn point_triangle_distance(p: [f64; 3], tri: [[f64; 3]; 3]) -> f64 {
    let sub = |u: [f64; 3], v: [f64; 3]| [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let seg = |a: [f64; 3], b: [f64; 3]| {
        let ab = sub(b, a);
        let t = (dot(sub(p, a), ab) / dot(ab, ab).max(1e-300)).clamp(0.0, 1.0);
        let q = [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]];
        dot(sub(p, q), sub(p, q)).sqrt()
    };
    let [a, b, c] = tri;
    let (e0, e1) = (sub(b, a), sub(c, a));
    let n = [e0[1] * e1[2] - e0[2] * e1[1], e0[2] * e1[0] - e0[0] * e1[2], e0[0] * e1[1] - e0[1] * e1[0]];
    let nn = dot(n, n);
    let best_edge = seg(a, b).min(seg(b, c)).min(seg(c, a));
    if nn == 0.0 {
        return best_edge;
    }
    let d = dot(sub(p, a), n) / nn;
    let q = [p[0] - d * n[0], p[1] - d * n[1], p[2] - d * n[2]];
    let inside = [(a, b), (b, c), (c, a)].iter().all(|&(u, v)| {
        let e = sub(v, u);
        let w = sub(q, u);
        let cr = [e[1] * w[2] - e[2] * w[1], e[2] * w[0] - e[0] * w[2], e[0] * w[1] - e[1] * w[0]];
        dot(cr, n) >= 0.0
    });
    if inside {
        d.abs() * nn.sqrt()
    } else {
        best_edge
    }
}

#[test]
fn block_mesh_counts() {
    let m = unit_block(10);
    assert_eq!(m.cells.len(), 1000);
    assert_eq!(m.patch_counts()[&Patch::Inlet], 100);
    assert_eq!(m.patch_counts()[&Patch::Outlet], 100);

    let one = unit_block(1);
    let faces = one.faces();
    assert_eq!(one.cells.len(), 1);
    assert_eq!(faces.len(), 6);
    assert!(faces.iter().all(|f| f.patch.is_some()));
}

#[test]
fn structured_face_count() {
    for n in 1..=6 {
        let faces = unit_block(n).faces();
        // Each axis has n + 1 planes of n * n faces.
        assert_eq!(faces.len(), 3 * n * n * (n + 1), "n = {n}");
    }
    assert_eq!(unit_block(4).faces().len(), 240);
}

#[test]
fn uniform_block_is_perfect() {
    let m = unit_block(6);
    let q = quality_check(&m, &QualityThresholds::default());
    assert!(q.is_clean());
    assert!((q.min_aspect_ratio - 1.0).abs() < 1e-12);
    assert!((q.max_aspect_ratio - 1.0).abs() < 1e-12);
    assert!(q.max_non_orthogonality < 1e-9);
    assert!(q.max_skewness < 1e-9);
}

#[test]
fn sliver_cell_is_the_only_violation() {
    let m = HexMesh::block_mesh(DomainBox::new([0.0; 3], [200.0, 1.0, 1.0]), [1, 1, 1]);
    let q = quality_check(&m, &QualityThresholds::default());
    assert_eq!(q.aspect_violations, 1);
    assert_eq!(q.violating_cells, vec![0]);
    assert!((q.max_aspect_ratio - 200.0).abs() < 1e-9);
}

#[test]
fn refinement_interface_angles() {
    let (m, _) = sphere_mesh(1);
    assert!(m.max_level() == 1);
    let q = quality_check(&m, &QualityThresholds::default());
    // Centre offset of a child across a 2:1 face: h/4 in two directions over 3h/4 normal.
    let expected = (2f64.sqrt() / 3.0).atan().to_degrees();
    assert!((q.max_non_orthogonality - expected).abs() < 1e-9, "{}", q.max_non_orthogonality);
    assert!(q.max_non_orthogonality <= 45.0);
    assert!(q.is_clean());
}

#[test]
fn sphere_removed_volume() {
    let (m, body) = sphere_mesh(0);
    let cell = 1.0 / 8000.0;
    let analytic = 4.0 / 3.0 * std::f64::consts::PI * 0.25f64.powi(3) / cell;
    let removed = m.removed.len() as f64;
    assert!((removed - analytic).abs() <= 0.1 * analytic, "removed {removed} vs {analytic}");
    let tessellated = body.signed_volume() / cell;
    assert!((removed - tessellated).abs() <= 0.1 * tessellated);
}

#[test]
fn no_fluid_centroid_inside_body() {
    for levels in [0, 2] {
        let (m, body) = sphere_mesh(levels);
        let oracle = |c: [f64; 3]| winding_number(&body, c) > 0.5;
        assert_eq!(m.cells.iter().filter(|c| oracle(c.centroid())).count(), 0);
        assert!(m.removed.iter().all(|c| oracle(c.centroid())));
    }
}

#[test]
fn two_to_one_balance_and_connectivity() {
    let (m, _) = sphere_mesh(2);
    assert_eq!(m.max_level(), 2);
    let faces = m.faces();
    for f in &faces {
        if let Some(n) = f.neighbour {
            let d = (m.cells[f.owner].level as i32 - m.cells[n].level as i32).abs();
            assert!(d <= 1, "levels {} and {}", m.cells[f.owner].level, m.cells[n].level);
        }
    }
    let mut adj = vec![Vec::new(); m.cells.len()];
    for f in &faces {
        if let Some(n) = f.neighbour {
            adj[f.owner].push(n);
            adj[n].push(f.owner);
        }
    }
    let mut seen = vec![false; m.cells.len()];
    let mut queue: VecDeque<usize> =
        faces.iter().filter(|f| f.patch == Some(Patch::Inlet)).map(|f| f.owner).collect();
    for &c in &queue {
        seen[c] = true;
    }
    while let Some(c) = queue.pop_front() {
        for &n in &adj[c] {
            if !seen[n] {
                seen[n] = true;
                queue.push_back(n);
            }
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn volume_accounting_is_exact() {
    for levels in [0, 1, 2] {
        let (m, _) = sphere_mesh(levels);
        let (fluid, surface, removed, domain) = m.volume_accounting();
        assert_eq!(fluid + surface + removed, domain, "levels = {levels}");
        let vol: f64 = m.cells.iter().chain(&m.removed).map(|c| c.volume()).sum();
        assert!((vol - 1.0).abs() < 1e-12);
    }
}

#[test]
fn body_faces_hug_the_surface() {
    let (m, body) = sphere_mesh(1);
    let faces = m.faces();
    let body_faces: Vec<_> = faces.iter().filter(|f| f.patch == Some(Patch::Body)).collect();
    assert!(!body_faces.is_empty());
    for f in body_faces {
        let d = (0..body.triangles.len())
            .map(|t| point_triangle_distance(f.center, body.triangle(t)))
            .fold(f64::INFINITY, f64::min);
        assert!(d <= m.cells[f.owner].diagonal(), "face at {:?} is {d} from the body", f.center);
    }
}

#[test]
fn empty_body_is_identity() {
    let bg = unit_block(5);
    let m = castellate(&bg, &TriMesh::new(Vec::new(), Vec::new()), 3).unwrap();
    assert_eq!(m.cells, bg.cells);
    assert!(m.removed.is_empty());
    assert_eq!(m.faces(), bg.faces());
}

#[test]
fn castellation_failures() {
    let bg = unit_block(10);
    let small = TriMesh::cuboid([0.41; 3], [0.54; 3]);
    let e = castellate(&bg, &small, 1).unwrap_err();
    assert_eq!((e.stage, e.code), (MeshStage::Castellation, FailureCode::UnderResolved));

    let outside = TriMesh::cuboid([0.5; 3], [1.2; 3]);
    assert_eq!(castellate(&bg, &outside, 0).unwrap_err().code, FailureCode::BodyOutsideDomain);

    let mut open = TriMesh::cuboid([0.2; 3], [0.8; 3]);
    open.triangles.pop();
    assert_eq!(castellate(&bg, &open, 0).unwrap_err().code, FailureCode::NonWatertightBody);
    assert!(matches!(InsideClassifier::new(&open), Err(MeshError::NonWatertightInput { open_edges: 3 })));
}

#[test]
fn classifier_matches_winding_number() {
    let p = WingedBodyParams::from_table(&ParameterTable::winged_body()).unwrap();
    let body = instantiate_winged(&p, Segments::new(16, 12)).unwrap();
    let cls = InsideClassifier::new(&body).unwrap();
    let bb = body.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut inside = 0;
    for _ in 0..10_000 {
        let q: [f64; 3] = std::array::from_fn(|a| {
            let pad = 0.05 * (bb.max[a] - bb.min[a]);
            rng.gen_range(bb.min[a] - pad..bb.max[a] + pad)
        });
        let w = winding_number(&body, q);
        assert_eq!(cls.contains(q), w > 0.5, "{q:?} winding {w}");
        inside += usize::from(w > 0.5);
    }
    assert!(inside > 100, "only {inside} interior samples");
}

fn spec(cells: [usize; 3], retries: u32) -> MeshSpec {
    MeshSpec {
        domain_scale: DomainScale { upstream: 1.0, downstream: 2.0, lateral: 1.0 },
        base_cells: cells,
        surface_refinement_levels: 0,
        max_retries: retries,
        quality: QualityThresholds::default(),
    }
}

#[test]
fn auto_mesh_first_attempt() {
    let body = TriMesh::uv_sphere([0.0; 3], 0.5, 32, 16);
    let r = auto_mesh(&body, &spec([16, 12, 12], 3)).unwrap();
    assert_eq!(r.attempts.len(), 1);
    assert!(r.attempts[0].failure.is_none());
}

#[test]
fn thin_wing_needs_two_doublings() {
    // Plate 1 x 1 x 0.18: centroid layers sit at +-h/2 around its mid-plane
    // so it is only seen once h < 0.18.
    let wing = TriMesh::cuboid([0.0, -0.5, -0.09], [1.0, 0.5, 0.09]);
    let r = auto_mesh(&wing, &spec([8, 6, 4], 4)).unwrap();
    let seq: Vec<[usize; 3]> = r.attempts.iter().map(|a| a.base_cells).collect();
    assert_eq!(seq, vec![[8, 6, 4], [16, 12, 8], [32, 24, 16]]);
    for a in &r.attempts[..2] {
        assert_eq!(a.failure.as_ref().map(|f| f.code), Some(FailureCode::UnderResolved));
    }
    assert!(r.attempts[2].failure.is_none());
    assert!(!r.mesh.removed.is_empty());
}

#[test]
fn degenerate_body_exhausts_retries() {
    let sheet = TriMesh::cuboid([0.0, -0.5, 0.0], [1.0, 0.5, 0.0]);
    match auto_mesh(&sheet, &spec([8, 6, 4], 2)) {
        Err(MeshError::AutoMeshExhausted { attempts }) => {
            assert_eq!(attempts.len(), 2);
            assert!(attempts.iter().all(|a| a.failure.is_some()));
            assert_eq!(attempts[1].base_cells, [16, 12, 8]);
        }
        other => panic!("expected exhaustion, got {other:?}"),
    }
}

#[test]
fn auto_mesh_rejects_open_surface() {
    let mut open = TriMesh::uv_sphere([0.0; 3], 0.5, 16, 8);
    open.triangles.truncate(open.triangles.len() - 2);
    assert!(matches!(auto_mesh(&open, &spec([8, 8, 8], 3)), Err(MeshError::NonWatertightInput { .. })));
}

#[test]
fn vtk_export_shape() {
    let (m, _) = sphere_mesh(1);
    let text = write_vtk(&m);
    assert!(text.starts_with("# vtk DataFile Version 3.0"));
    assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
    let boundary = m.faces().iter().filter(|f| f.patch.is_some()).count();
    let n = m.cells.len() + boundary;
    assert!(text.contains(&format!("CELL_TYPES {n}\n")));
    let types: Vec<&str> = text.split("CELL_TYPES").nth(1).unwrap().lines().skip(1).take(n).collect();
    assert_eq!(types.iter().filter(|t| **t == "12").count(), m.cells.len());
    assert_eq!(types.iter().filter(|t| **t == "9").count(), boundary);
}

#[test]
fn classification_is_thread_count_independent() {
    let body = TriMesh::uv_sphere([0.5, 0.5, 0.5], 0.25, 32, 16);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = castellate(&unit_block(12), &body, 1).unwrap();
    let b = pool.install(|| castellate(&unit_block(12), &body, 1).unwrap());
    assert_eq!(a.cells, b.cells);
    assert_eq!(a.removed, b.removed);
}
