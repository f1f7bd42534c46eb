use anvil_core::geometry::{
    instantiate_fuselage, instantiate_hull, instantiate_winged, HullParams, ParameterTable, Segments,
    WingedBodyParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule of pi * r(x)^2 over the hull profile.
fn profile_volume(p: &HullParams) -> f64 {
    let prof = p.profile();
    let n = 20_000;
    let h = p.total_length / n as f64;
    let f = |x: f64| {
        let r = prof.eval(x);
        std::f64::consts::PI * r * r
    };
    let mut s = f(0.0) + f(p.total_length);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

fn random_hull(rng: &mut ChaCha8Rng) -> HullParams {
    let mut cps = [0.0; 6];
    for c in &mut cps {
        *c = rng.gen_range(0.0..=0.2);
    }
    HullParams { control_points: cps, nose_length: rng.gen_range(10.0..=900.0), total_length: 1000.0 }
}

fn random_winged(rng: &mut ChaCha8Rng) -> WingedBodyParams {
    loop {
        let p = WingedBodyParams {
            nose_radius: rng.gen_range(100.0..=800.0),
            fuselage_length: rng.gen_range(100.0..=800.0),
            tail_length: rng.gen_range(100.0..=800.0),
            thickness_wing: rng.gen_range(5.0..=50.0),
            half_span: rng.gen_range(50.0..=200.0),
            chord: rng.gen_range(50.0..=200.0),
        };
        if p.chord < p.fuselage_length {
            return p;
        }
    }
}

#[test]
fn hull_volume_matches_profile_quadrature() {
    let p = HullParams {
        control_points: [0.05, 0.1, 0.15, 0.15, 0.1, 0.05],
        nose_length: 400.0,
        total_length: 1000.0,
    };
    let mesh = instantiate_hull(&p, Segments::new(64, 128)).unwrap();
    let oracle = profile_volume(&p);
    let rel = (mesh.signed_volume() - oracle).abs() / oracle;
    assert!(rel < 5e-3, "relative volume error {rel}");
}

#[test]
fn fuselage_volume_matches_closed_form() {
    let p = WingedBodyParams::from_table(&ParameterTable::winged_body()).unwrap();
    let mesh = instantiate_fuselage(&p, Segments::new(64, 64)).unwrap();
    let rel = (mesh.signed_volume() - p.fuselage_volume()).abs() / p.fuselage_volume();
    assert!(rel < 5e-3, "relative volume error {rel}");
    assert!(mesh.is_closed_outward());
}

#[test]
fn winged_volume_matches_closed_form() {
    let p = WingedBodyParams::from_table(&ParameterTable::winged_body()).unwrap();
    let mesh = instantiate_winged(&p, Segments::new(64, 64)).unwrap();
    let rel = (mesh.signed_volume() - p.solid_volume()).abs() / p.solid_volume();
    assert!(rel < 5e-3, "relative volume error {rel}");
}

#[test]
fn thousand_random_hulls_are_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let p = random_hull(&mut rng);
        let m = instantiate_hull(&p, Segments::new(24, 48)).unwrap();
        let topo = m.topology();
        assert!(topo.is_watertight() && topo.misoriented_edges == 0, "{p:?}");
        assert_eq!(topo.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0, "{p:?}");
    }
}

#[test]
fn thousand_random_winged_bodies_are_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let p = random_winged(&mut rng);
        let m = instantiate_winged(&p, Segments::new(24, 16)).unwrap();
        let topo = m.topology();
        assert!(topo.is_watertight() && topo.misoriented_edges == 0, "{p:?}");
        assert_eq!(topo.euler_characteristic(), 2);
        assert!(m.signed_volume() > 0.0, "{p:?}");
    }
}

#[test]
fn instantiation_is_deterministic() {
    let p = WingedBodyParams::from_table(&ParameterTable::winged_body()).unwrap();
    let a = instantiate_winged(&p, Segments::new(32, 32)).unwrap();
    let b = instantiate_winged(&p, Segments::new(32, 32)).unwrap();
    let bits = |m: &anvil_core::geometry::TriMesh| {
        m.vertices.iter().flat_map(|v| v.map(f64::to_bits)).collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.triangles, b.triangles);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_a_control_point_never_shrinks_the_hull(
        cps in prop::array::uniform6(0.0f64..0.2),
        nose in 10.0f64..900.0,
        k in 0usize..6,
        bump in 0.0f64..0.1,
    ) {
        let base = HullParams { control_points: cps, nose_length: nose, total_length: 1000.0 };
        let mut raised = base.clone();
        raised.control_points[k] = (cps[k] + bump).min(0.2);
        let seg = Segments::new(32, 256);
        let v0 = instantiate_hull(&base, seg).unwrap().signed_volume();
        let v1 = instantiate_hull(&raised, seg).unwrap().signed_volume();
        prop_assert!(v1 >= v0 * (1.0 - 1e-12), "v0 {v0} v1 {v1}");
    }
}
