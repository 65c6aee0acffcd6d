use super::*;
use crate::recon::SSchedule;

fn unit_spec(m: usize, c0: f64) -> ScenarioSpec {
    ScenarioSpec {
        m,
        c0,
        c: 0.2,
        alpha: 0.05,
        index_range: (C64::new(1.5, 0.0), C64::new(2.5, 0.5)),
        extent: [1.0; 3],
    }
}

#[test]
fn scenarios_respect_constraints_and_seed() {
    let sc = synthesize_scenario(7, &unit_spec(2, 0.3)).unwrap();
    assert_eq!(sc.len(), 2);
    assert!(dist(sc.centers[0], sc.centers[1]) >= 0.3);
    for z in &sc.centers {
        assert!(clearance([1.0; 3], *z) >= 0.2);
    }
    assert_eq!(sc, synthesize_scenario(7, &unit_spec(2, 0.3)).unwrap());
    assert_ne!(sc, synthesize_scenario(8, &unit_spec(2, 0.3)).unwrap());
    assert!(synthesize_scenario(1, &unit_spec(0, 0.3)).unwrap().is_empty());
    assert!(matches!(
        synthesize_scenario(1, &unit_spec(50, 0.5)),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn rasterized_ball_volume() {
    let g = BoxGrid::unit_cube(32).unwrap();
    let h = g.h_max();
    let cells = rasterized_volume(&g, [0.5; 3], 0.1) / h.powi(3);
    let want = 4.0 / 3.0 * std::f64::consts::PI * 1e-3 / h.powi(3);
    assert!((cells - want).abs() <= 0.15 * want, "{cells} vs {want}");

    let bg = RefractiveIndexField::homogeneous(&g, C64::new(1.0, 0.0)).unwrap();
    let sc = InclusionScenario::new([1.0; 3], vec![[0.5; 3]], 0.1, vec![C64::new(2.0, 0.5)], 0.3, 0.2).unwrap();
    let n = perturbed_index(&sc, &bg, &g).unwrap();
    let inside = n.values().iter().filter(|v| **v == C64::new(2.0, 0.5)).count();
    let vol: f64 = (0..g.n_edges())
        .filter(|&e| n.values()[e] != C64::new(1.0, 0.0))
        .map(|e| g.edge_weight(e))
        .sum::<f64>()
        / 3.0;
    assert!(inside > 0);
    assert!((vol - rasterized_volume(&g, [0.5; 3], 0.1)).abs() < 1e-15);

    let empty = sc.with_indices(vec![]);
    let empty = InclusionScenario { centers: vec![], ..empty };
    assert_eq!(perturbed_index(&empty, &bg, &g).unwrap(), bg);
    let small = InclusionScenario { alpha: 0.5 * h, ..sc };
    assert!(matches!(
        perturbed_index(&small, &bg, &g),
        Err(Error::UnderResolved { .. })
    ));
}

#[test]
fn asymptotic_functional_examples() {
    let n = C64::new(1.0, 0.0);
    let eta = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
    let eta = {
        // η·η = 0.36 − 0.64 ≠ 1; rescale to η·η = 1
        let s = cdot(eta, eta).sqrt();
        eta.map(|v| v / s)
    };
    let probe = move |_: [f64; 3]| eta;
    let c = C64::new(0.7, 0.2);
    let sc = InclusionScenario::new([1.0; 3], vec![[0.4, 0.5, 0.6]], 0.05, vec![n + c], 0.3, 0.2).unwrap();
    let v = asymptotic_functional(&sc, n, probe, probe, &Polarization::Identity).unwrap();
    assert!((v - 0.05f64.powi(3) * c).norm() < 1e-15);
    let zero = sc.with_indices(vec![n]);
    assert_eq!(asymptotic_functional(&zero, n, probe, probe, &Polarization::Ball).unwrap(), C64::new(0.0, 0.0));
    let none = InclusionScenario { centers: vec![], indices: vec![], ..sc };
    assert_eq!(asymptotic_functional(&none, n, probe, probe, &Polarization::Identity).unwrap(), C64::new(0.0, 0.0));
}

fn two_inclusions(g: &BoxGrid) -> (InclusionScenario, Vec<EffectiveMoment>) {
    // centers on cell centers so the synthesis peaks are symmetric
    let z1 = g.cell_center([3, 7, 8]);
    let z2 = g.cell_center([12, 7, 8]);
    let n = C64::new(1.0, 0.0);
    let nj = C64::new(2.0, 0.5);
    let sc = InclusionScenario::new(g.extent(), vec![z1, z2], 0.06, vec![nj, nj], 0.3, 0.15).unwrap();
    let m = planted_moments(&sc, n, &Polarization::Ball, None).unwrap();
    (sc, m)
}

#[test]
fn surrogate_data_are_recovered_exactly() {
    let g = BoxGrid::unit_cube(16).unwrap();
    let k = 12.0;
    let lg = LGrid::new(&g, k, 2.0 * k, SSchedule::default()).unwrap();
    let (sc, planted) = two_inclusions(&g);
    let table = moment_table(&lg, &planted);
    // exact centers reproduce the moments
    let q = fit_moments(&table, &sc.centers, 1e-8).unwrap();
    for (a, b) in q.iter().zip(&planted) {
        assert!((a - b.scalar).norm() <= 1e-6 * b.scalar.norm());
    }
    let opts = LocateOptions::new(ScanOptions::new(crate::recon::Route::Synthetic), sc.c0);
    let loc = locate_from_table(table, &g, Some(2), &opts).unwrap();
    assert_eq!(loc.centers.len(), 2);
    for z in &sc.centers {
        let (j, d) = loc
            .centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, dist(*c, *z)))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        assert!(d < 1e-9, "center off by {d}");
        let want = planted.iter().find(|p| p.center == *z).unwrap().scalar;
        assert!((loc.moments[j].scalar - want).norm() <= 1e-6 * want.norm());
    }
}

#[test]
fn translation_multiplies_samples_by_phase() {
    let g = BoxGrid::unit_cube(16).unwrap();
    let lg = LGrid::new(&g, 8.0, 16.0, SSchedule::default()).unwrap();
    let (sc, planted) = two_inclusions(&g);
    let delta = [g.spacing()[0], 0.0, -2.0 * g.spacing()[2]];
    let moved = sc.translated(delta);
    let pm = planted_moments(&moved, C64::new(1.0, 0.0), &Polarization::Ball, None).unwrap();
    let a = moment_table(&lg, &planted);
    let b = moment_table(&lg, &pm);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let ph = C64::from_polar(1.0, dot3(x.l, delta));
        assert!((y.value - x.value * ph).norm() <= 1e-14 * x.value.norm().max(1e-300));
    }
}

#[test]
fn empty_tables_have_no_peaks() {
    let g = BoxGrid::unit_cube(8).unwrap();
    let lg = LGrid::new(&g, 4.0, 8.0, SSchedule::default()).unwrap();
    let t = moment_table(&lg, &[]);
    let opts = LocateOptions::new(ScanOptions::new(crate::recon::Route::Synthetic), 0.3);
    assert!(matches!(locate_from_table(t, &g, None, &opts), Err(Error::NoPeaks)));
}

#[test]
fn coincident_centers_are_rank_deficient() {
    let g = BoxGrid::unit_cube(8).unwrap();
    let lg = LGrid::new(&g, 4.0, 8.0, SSchedule::default()).unwrap();
    let t = moment_table(&lg, &[EffectiveMoment::isotropic([0.5; 3], C64::new(1.0, 0.0), false)]);
    assert!(matches!(
        fit_moments(&t, &[[0.5; 3], [0.5, 0.5, 0.5 + 1e-12]], 1e-8),
        Err(Error::RankDeficient)
    ));
}
