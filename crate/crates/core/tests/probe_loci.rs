mod common;

use distvp::driver::{self, RunSettings};
use distvp::probe::{closed_form_locus, locus, locus_metrics, Plane, ProbeError};
use distvp::{ArcBoundary, MaterialParams, MaterialState};

fn prestrained(p: &MaterialParams, hoop: bool) -> MaterialState {
    let program = if hoop { driver::hoop_prestrain() } else { driver::axial_prestrain() };
    driver::run(p, &MaterialState::virgin(), &program, &RunSettings::default()).unwrap().final_state
}

#[test]
fn virgin_loci_are_circles_in_both_planes() {
    let p = common::alloy_egg();
    for plane in [Plane::AxialTorsion, Plane::HoopTorsion] {
        let l = locus(&p, &MaterialState::virgin(), plane, 0.0, 0.0, 128).unwrap();
        for pt in l.polygon() {
            assert!(((pt.a * pt.a + pt.b * pt.b).sqrt() - p.k0).abs() < 1e-6);
        }
    }
}

#[test]
fn traced_locus_matches_the_mapped_shape() {
    let p = common::alloy_egg();
    let state = prestrained(&p, false);
    for f in [0.0, 1.0] {
        let traced = locus(&p, &state, Plane::AxialTorsion, 0.0, f, 180).unwrap();
        let mapped = closed_form_locus(&p, &state, f, 180).unwrap();
        for (a, b) in traced.points.iter().zip(&mapped.points) {
            assert!((a.a - b.a).abs() < 1e-6 && (a.b - b.b).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn hoop_prestrain_loci_are_symmetric_in_the_axial_stress() {
    let p = common::alloy_egg();
    let state = prestrained(&p, true);
    for c in [5.0, 10.0, 15.0] {
        let plus = locus(&p, &state, Plane::HoopTorsion, c, 0.0, 360).unwrap();
        let minus = locus(&p, &state, Plane::HoopTorsion, -c, 0.0, 360).unwrap();
        assert!(plus.is_convex() && minus.is_convex());
        let (mp, mm) = (locus_metrics(&plus), locus_metrics(&minus));
        assert!((mp.area - mm.area).abs() < 1e-6 * mp.area);
        assert!((mp.forward_extent - mm.forward_extent).abs() < 1e-6);
        assert!((mp.backward_extent - mm.backward_extent).abs() < 1e-6);
        // An axial stress of c shifts the hoop stress deviator by exactly c.
        let top = |l: &distvp::probe::YieldLocus| l.polygon().iter().map(|q| q.a).fold(f64::MIN, f64::max);
        assert!((top(&plus) - top(&minus) - c).abs() < 1e-3, "c = {c}");
    }
}

#[test]
fn larger_axial_stress_shrinks_the_hoop_locus() {
    let p = common::alloy_egg();
    let state = prestrained(&p, true);
    let areas: Vec<f64> = [5.0, 10.0, 15.0]
        .iter()
        .map(|&c| locus_metrics(&locus(&p, &state, Plane::HoopTorsion, c, 0.0, 360).unwrap()).area)
        .collect();
    assert!(areas[0] > areas[1] && areas[1] > areas[2], "{areas:?}");
}

#[test]
fn distortion_fades_on_outer_isolines() {
    let p = common::alloy_egg();
    let state = prestrained(&p, false);
    let ratios: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|&f| {
            let l = locus(&p, &state, Plane::AxialTorsion, 0.0, f, 720).unwrap();
            assert!(l.is_convex());
            locus_metrics(&l).distortion_ratio
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(ratios[0] > 1.0);
}

#[test]
fn unit_disc_keeps_circular_loci_after_prestrain() {
    let p = MaterialParams::reference_alloy(ArcBoundary::unit_half_disc());
    let state = prestrained(&p, false);
    let l = locus(&p, &state, Plane::AxialTorsion, 0.0, 0.0, 256).unwrap();
    let m = locus_metrics(&l);
    assert!((m.forward_extent - m.backward_extent).abs() < 1e-6);
    assert!((m.distortion_ratio - 1.0).abs() < 1e-3);
}

#[test]
fn off_subspace_backstress_is_rejected() {
    let p = common::alloy_egg();
    let state = prestrained(&p, false);
    assert!(matches!(closed_form_locus(&p, &state, -1.0, 64), Err(ProbeError::InvalidInput(_))));
    let shear = driver::run(&p, &MaterialState::virgin(), &driver::uniaxial_prestrain("13", 0.01, 1e-3), &RunSettings::default()).unwrap();
    assert!(matches!(
        locus(&p, &shear.final_state, Plane::AxialTorsion, 0.0, 0.0, 64),
        Err(ProbeError::SubspaceViolation(_))
    ));
}
