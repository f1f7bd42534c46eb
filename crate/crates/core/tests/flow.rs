use std::time::Duration;

use anvil_core::config::{fixtures, parse_config, DomainScale, MeshSpec, QualityThresholds};
use anvil_core::flow::*;
use anvil_core::geometry::{instantiate_hull, HullParams, ParameterTable, TriMesh};
use anvil_core::mesh::{auto_mesh, DomainBox, HexMesh, Patch};
use proptest::prelude::*;

const DX: f64 = 1e-3;

/// 2-D square cylinder of side `d` cells, one cell thick in z.
fn square_cylinder(nx: usize, ny: usize, d: usize, shift: usize) -> VoxelGrid {
    let mut g = VoxelGrid::empty([nx, ny, 1], DX);
    let y0 = (ny - d) / 2;
    for y in y0..y0 + d + shift {
        for x in nx / 4..nx / 4 + d {
            let i = g.index(x, y, 0);
            g.solid[i] = true;
        }
    }
    g
}

fn slab_flow() -> Boundaries {
    let mut bc = Boundaries::external_flow();
    bc.axes[2] = StreamBoundary::Periodic;
    bc
}

fn conditions_for_re(re: f64, d: usize, speed: f64) -> FlowConditions {
    FlowConditions::new(speed, 1000.0, speed * d as f64 * DX / re, 0.01).unwrap()
}

#[test]
fn turbulence_initial_values() {
    let cond = FlowConditions::new(2.5, 1000.0, 1e-6, 0.01).unwrap();
    let ic = compute_turbulence_ic(&cond, 0.1, DEFAULT_C_MU);
    assert!((ic.k - 9.375e-4).abs() < 1e-15);
    // sqrt(1.5) U I / (0.09^0.25 L), evaluated by hand.
    let omega = 1.224_744_871_391_589 * 0.025 / (0.547_722_557_505_166 * 0.1);
    assert!((ic.omega - omega).abs() < 1e-12);
    assert!((ic.omega - 0.5589).abs() < 5e-4);

    let tiny = FlowConditions::new(2.5, 1000.0, 1e-6, 1e-12).unwrap();
    assert!(compute_turbulence_ic(&tiny, 0.1, DEFAULT_C_MU).k < 1e-20);
}

#[test]
fn invalid_conditions_rejected() {
    assert!(FlowConditions::new(0.0, 1.0, 1e-5, 0.01).is_err());
    assert!(FlowConditions::new(1.0, 1.0, -1e-5, 0.01).is_err());
    let air = FlowConditions::new(50.0, 1.225, 1.5e-5, 0.01).unwrap();
    assert!((air.reynolds(2.0) - 50.0 * 2.0 / 1.5e-5).abs() < 1e-6);
}

#[test]
fn unit_scaling_stays_stable() {
    let cond = FlowConditions::new(0.01, 1000.0, 3e-6, 0.01).unwrap();
    let s = UnitScale::choose(&cond, DX, 0.05).unwrap();
    assert!(s.tau > TAU_RANGE.0 && s.tau < TAU_RANGE.1);
    assert!(s.lattice_velocity <= MAX_LATTICE_VELOCITY);
    assert!((s.velocity() * s.lattice_velocity - 0.01).abs() < 1e-15);

    let turbulent = FlowConditions::new(50.0, 1.225, 1.5e-5, 0.01).unwrap();
    assert!(matches!(UnitScale::choose(&turbulent, 0.01, 0.05), Err(FlowError::StabilityBound { .. })));
}

fn free_stream(speed: f64) -> FlowField {
    let grid = VoxelGrid::empty([12, 6, 6], DX);
    let cond = FlowConditions::new(speed, 1000.0, speed * DX / 2.0, 0.01).unwrap();
    lbm_solve(&grid, &cond, Boundaries::external_flow(), &LbmOptions::new(2000, 1e-10)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn free_stream_is_undisturbed(speed in 0.01f64..5.0) {
        let field = free_stream(speed);
        let cond = FlowConditions::new(speed, 1000.0, speed * DX / 2.0, 0.01).unwrap();
        let report = drag_from_field(&field, &cond, 1.0);
        prop_assert!(report.drag_force.abs() < 1e-10);
        for v in &field.velocity {
            prop_assert!((v[0] - speed).abs() < 1e-12 * speed);
            prop_assert!(v[1].abs() < 1e-12 * speed && v[2].abs() < 1e-12 * speed);
        }
        prop_assert!(field.outlet_pressure().abs() < 1e-9 * cond.dynamic_pressure());
    }

    #[test]
    fn poiseuille_profile(tau in 0.6f64..1.5) {
        let h = 32;
        let speed = 0.01;
        // Lattice viscosity (tau - 1/2)/3 at lattice velocity 0.05.
        let nu = (tau - 0.5) / 3.0 * speed * DX / 0.05;
        let height = h as f64 * DX;
        let g = 8.0 * nu * speed / (height * height);
        let cond = FlowConditions::new(speed, 1000.0, nu, 0.01).unwrap();
        let bc = Boundaries {
            axes: [StreamBoundary::Periodic, StreamBoundary::Wall, StreamBoundary::Periodic],
            body_force: [g, 0.0, 0.0],
        };
        let grid = VoxelGrid::empty([1, h, 1], DX);
        let field = lbm_solve(&grid, &cond, bc, &LbmOptions::new(400_000, 1e-10)).unwrap();
        let mut worst = 0.0f64;
        for j in 0..h {
            let y = (j as f64 + 0.5) * DX;
            let exact = g / (2.0 * nu) * y * (height - y);
            worst = worst.max((field.velocity[j][0] - exact).abs() / speed);
        }
        prop_assert!(worst < 0.02, "max deviation {}", worst);
    }
}

#[test]
fn resting_field_has_no_drag() {
    let grid = square_cylinder(32, 16, 4, 0);
    let cond = conditions_for_re(20.0, 4, 0.01);
    let scale = UnitScale::choose(&cond, DX, 0.05).unwrap();
    let bc = Boundaries { axes: [StreamBoundary::Periodic; 3], body_force: [0.0; 3] };
    let field = Lattice::new(grid, bc, scale).into_field(Vec::new());
    assert!(field.velocity.iter().all(|v| *v == [0.0; 3]));
    let f = body_force(&field);
    assert!(f.iter().all(|x| x.abs() < 1e-15), "{f:?}");
}

#[test]
fn square_cylinder_self_convergence() {
    let grid = square_cylinder(96, 48, 6, 0);
    let cond = conditions_for_re(20.0, 6, 0.01);
    let area = 6.0 * DX * DX;
    let coarse = lbm_solve(&grid, &cond, slab_flow(), &LbmOptions::new(200_000, 1e-6)).unwrap();
    let fine = lbm_solve(&grid, &cond, slab_flow(), &LbmOptions::new(200_000, 5e-7)).unwrap();
    let a = drag_from_field(&coarse, &cond, area);
    let b = drag_from_field(&fine, &cond, area);
    assert!(a.drag_force > 0.0);
    // Confined steady wake at Re 20: a bluff-body coefficient of a few units.
    assert!(a.drag_coefficient > 1.0 && a.drag_coefficient < 10.0, "cd {}", a.drag_coefficient);
    let rel = (a.drag_force - b.drag_force).abs() / b.drag_force;
    assert!(rel < 5e-3, "relative drag change {rel}");
    // Symmetric about the flow axis.
    assert!(a.force[1].abs() < 1e-10 * a.drag_force.abs(), "lateral {}", a.force[1]);
}

#[test]
fn mass_is_conserved_at_convergence() {
    let grid = square_cylinder(96, 48, 6, 0);
    let cond = conditions_for_re(20.0, 6, 0.01);
    let field = lbm_solve(&grid, &cond, slab_flow(), &LbmOptions::new(400_000, 1e-12)).unwrap();
    let defect = field.mass_flux_defect();
    assert!(defect < 1e-8, "mass flux defect {defect}");
    assert!(field.outlet_pressure().abs() < 1e-3 * cond.dynamic_pressure());
}

#[test]
fn mirrored_body_has_identical_drag() {
    let grid = square_cylinder(64, 32, 4, 1);
    let mirrored = grid.mirrored_y();
    assert_ne!(grid, mirrored);
    let cond = conditions_for_re(20.0, 4, 0.01);
    let opts = LbmOptions::new(100_000, 1e-8);
    let a = drag_from_field(&lbm_solve(&grid, &cond, slab_flow(), &opts).unwrap(), &cond, 1.0);
    let b = drag_from_field(&lbm_solve(&mirrored, &cond, slab_flow(), &opts).unwrap(), &cond, 1.0);
    let rel = (a.drag_force - b.drag_force).abs() / a.drag_force.abs();
    assert!(rel < 1e-12, "relative difference {rel}");
    assert!((a.force[1] + b.force[1]).abs() < 1e-10 * a.drag_force.abs());
    assert!(a.force[1].abs() > 1e-6 * a.drag_force.abs());
}

#[test]
fn drag_grows_with_speed() {
    let grid = square_cylinder(64, 32, 4, 0);
    let nu = 0.01 * 4.0 * DX / 10.0;
    let mut last = 0.0;
    for speed in [0.005, 0.01, 0.02] {
        let cond = FlowConditions::new(speed, 1000.0, nu, 0.01).unwrap();
        let field = lbm_solve(&grid, &cond, slab_flow(), &LbmOptions::new(100_000, 1e-7)).unwrap();
        let d = drag_from_field(&field, &cond, 1.0).drag_force;
        assert!(d > last, "drag {d} at {speed} m/s not above {last}");
        last = d;
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let grid = square_cylinder(32, 16, 4, 1);
    let cond = conditions_for_re(10.0, 4, 0.01);
    let opts = LbmOptions { max_steps: 1000, residual_tol: 0.0, lattice_velocity: 0.05, window: 100 };
    let run = || {
        let scale = UnitScale::choose(&cond, DX, 0.05).unwrap();
        let mut lat = Lattice::new(grid.clone(), slab_flow(), scale);
        assert!(lat.run(&opts).is_err());
        lat.body_force_lattice()
    };
    let a = run();
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
}

#[test]
fn diverging_run_is_reported() {
    let grid = square_cylinder(32, 16, 4, 0);
    let cond = conditions_for_re(20.0, 4, 0.01);
    let mut scale = UnitScale::choose(&cond, DX, 0.05).unwrap();
    scale.lattice_velocity = 0.5;
    let mut lat = Lattice::new(grid, slab_flow(), scale);
    let opts = LbmOptions::new(10_000, 1e-9);
    assert!(matches!(lat.run(&opts), Err(FlowError::Diverged { .. })));
}

#[test]
fn frontal_area_of_cube_and_sphere() {
    let cube = TriMesh::cuboid([0.0; 3], [1000.0; 3]);
    assert!((frontal_area(&cube, 64) - 1.0).abs() < 1e-12);
    let sphere = TriMesh::uv_sphere([0.0; 3], 500.0, 96, 48);
    let disc = std::f64::consts::PI * 0.25;
    assert!((frontal_area(&sphere, 512) - disc).abs() < 0.01 * disc);
}

#[test]
fn field_export_round_trip() {
    let field = free_stream(0.01);
    let grid = VoxelGrid::empty([10, 10, 10], DX);
    let cond = FlowConditions::new(0.01, 1000.0, 0.01 * DX / 2.0, 0.01).unwrap();
    let scale = UnitScale::choose(&cond, DX, 0.05).unwrap();
    let ten = Lattice::new(grid, Boundaries::external_flow(), scale).into_field(Vec::new());
    let text = field_to_vtk(&ten);
    assert!(text.contains("POINT_DATA 1000\n"));
    assert_eq!(import_field(&text).unwrap().velocity.len(), 1000);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.vtk");
    export_field(&field, &path).unwrap();
    let back = import_field(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.dims, field.grid.dims);
    assert_eq!(back.velocity, field.velocity);
    assert_eq!(back.pressure, field.pressure);
    // Physical units: the inlet speed, not the lattice velocity.
    assert!(back.velocity.iter().all(|v| (v[0] - 0.01).abs() < 1e-12));
}

fn uuv_case(dir: &std::path::Path) -> (ExternalCase, FlowConditions, TurbulenceIc) {
    let cfg = parse_config(fixtures::UUV).unwrap();
    let table = ParameterTable::revolved_hull();
    let body = instantiate_hull(&HullParams::from_table(&table).unwrap(), cfg.design.segments).unwrap();
    let mesh = auto_mesh(&body, &cfg.mesh).unwrap().mesh;
    let cond = FlowConditions::from_fluid(&cfg.fluid).unwrap();
    let length = body.bounding_box().extent()[0] / 1000.0;
    let ic = compute_turbulence_ic(&cond, 0.07 * length, DEFAULT_C_MU);
    let argv = vec!["simpleFoam".to_string(), "-case".into(), ".".into()];
    let case = emit_external_case(&mesh, &cond, &ic, frontal_area(&body, 128), &argv, dir).unwrap();
    (case, cond, ic)
}

#[test]
fn uuv_external_case_files() {
    let dir = tempfile::tempdir().unwrap();
    let (case, cond, ic) = uuv_case(dir.path());
    assert_eq!(case.records.len(), 4);
    let bc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(BOUNDARY_FILE)).unwrap()).unwrap();
    let patches = bc["patches"].as_array().unwrap();
    let find = |name: &str| patches.iter().find(|p| p["patch"] == name).unwrap().clone();
    assert_eq!(find("inlet")["type"], "fixed_velocity");
    assert_eq!(find("inlet")["velocity"][0].as_f64().unwrap(), 1.00584);
    assert_eq!(find("outlet")["type"], "fixed_pressure");
    assert_eq!(find("outlet")["gauge_pressure"].as_f64().unwrap(), 0.0);
    assert_eq!(find("body")["type"], "no_slip");
    assert_eq!(find("symmetry")["type"], "symmetry");
    assert!((cond.inlet_speed - 2.25 * 1609.344 / 3600.0).abs() < 1e-12);

    let init: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(INITIAL_FILE)).unwrap()).unwrap();
    assert_eq!(init["k"].as_f64().unwrap(), ic.k);
    assert_eq!(init["omega"].as_f64().unwrap(), ic.omega);
    assert!(dir.path().join(MESH_FILE).exists());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(CASE_FILE)).unwrap()).unwrap();
    assert_eq!(meta["argv"][0], "simpleFoam");
}

#[test]
fn missing_outlet_patch() {
    let mut mesh = HexMesh::block_mesh(DomainBox::new([0.0; 3], [4.0, 2.0, 2.0]), [4, 2, 2]);
    let last: Vec<usize> = (0..mesh.cells.len()).filter(|&i| mesh.cells[i].ijk[0] == 3).collect();
    mesh.remove_cells(&last);
    let cond = FlowConditions::new(1.0, 1.0, 1e-5, 0.01).unwrap();
    let ic = compute_turbulence_ic(&cond, 0.1, DEFAULT_C_MU);
    let dir = tempfile::tempdir().unwrap();
    let err = emit_external_case(&mesh, &cond, &ic, 1.0, &["true".into()], dir.path()).unwrap_err();
    assert!(matches!(err, FlowError::MissingPatch(Patch::Outlet)));
}

fn stub_case(script: &str) -> (tempfile::TempDir, ExternalCase) {
    let dir = tempfile::tempdir().unwrap();
    let mesh = {
        let bg = HexMesh::block_mesh(DomainBox::new([0.0; 3], [8.0, 4.0, 4.0]), [8, 4, 4]);
        let body = TriMesh::cuboid([2.0, 1.0, 1.0], [5.0, 3.0, 3.0]);
        anvil_core::mesh::castellate(&bg, &body, 0).unwrap()
    };
    let cond = FlowConditions::new(2.0, 1.0, 1e-5, 0.01).unwrap();
    let ic = compute_turbulence_ic(&cond, 0.1, DEFAULT_C_MU);
    let argv = vec!["sh".to_string(), "-c".into(), script.into()];
    let case = emit_external_case(&mesh, &cond, &ic, 0.5, &argv, dir.path()).unwrap();
    (dir, case)
}

#[test]
fn external_runner_contract() {
    let (_d, case) = stub_case("printf 'time,drag_N\\n1,4.2\\n' > forces.csv");
    let r = run_external(&case, Duration::from_secs(20)).unwrap();
    assert_eq!(r.drag_force, 4.2);
    assert_eq!(r.iterations, 1);
    assert!((r.drag_coefficient - 4.2 / (0.5 * 1.0 * 4.0 * 0.5)).abs() < 1e-12);

    let (_d, case) = stub_case("printf 'time,drag_N\\n1,4.2\\n2,3.9\\n' > forces.csv");
    assert_eq!(run_external(&case, Duration::from_secs(20)).unwrap().drag_force, 3.9);

    let (_d, case) = stub_case("echo diverged badly; exit 1");
    match run_external(&case, Duration::from_secs(20)) {
        Err(FlowError::CommandFailed { code: Some(1), log }) => assert!(log.contains("diverged badly")),
        other => panic!("{other:?}"),
    }

    let (_d, case) = stub_case(": > forces.csv");
    assert!(matches!(run_external(&case, Duration::from_secs(20)), Err(FlowError::ParseError { .. })));

    let (_d, case) = stub_case("printf 'time,drag_N\\n1,abc\\n' > forces.csv");
    assert!(matches!(run_external(&case, Duration::from_secs(20)), Err(FlowError::ParseError { line: 2, .. })));

    let (_d, case) = stub_case("true");
    assert!(matches!(run_external(&case, Duration::from_secs(20)), Err(FlowError::ResultMissing(_))));

    let (_d, case) = stub_case("sleep 5");
    assert!(matches!(run_external(&case, Duration::from_millis(200)), Err(FlowError::Timeout { .. })));
}

#[test]
fn internal_pipeline_on_a_sphere() {
    let body = TriMesh::uv_sphere([0.0; 3], 4.0, 32, 16);
    let spec = MeshSpec {
        domain_scale: DomainScale { upstream: 1.0, downstream: 2.0, lateral: 1.0 },
        base_cells: [32, 12, 12],
        surface_refinement_levels: 0,
        max_retries: 2,
        quality: QualityThresholds::default(),
    };
    let mesh = auto_mesh(&body, &spec).unwrap().mesh;
    let grid = VoxelGrid::from_mesh(&mesh);
    assert!(grid.solid_count() > 0);
    // Re 10 on an 8 mm sphere.
    let cond = FlowConditions::new(0.01, 1000.0, 0.01 * 0.008 / 10.0, 0.01).unwrap();
    let (report, field) = internal_drag(&mesh, &body, &cond, &LbmOptions::new(50_000, 1e-6)).unwrap();
    assert!(report.drag_force > 0.0 && report.drag_force.is_finite());
    assert!((report.reference_area - std::f64::consts::PI * 16e-6).abs() < 0.02 * std::f64::consts::PI * 16e-6);
    assert!(report.force[1].abs() < 1e-6 * report.drag_force);
    assert!(field.steps > 0);
}
