use std::sync::{Arc, OnceLock};

use maxtomo::cgo::{cgo_pair, n_xi_apply, CgoFrame};
use maxtomo::grid::{BoxGrid, Face};
use maxtomo::impedance::{apply_impedance, assemble_impedance, ImpedanceOperator};
use maxtomo::io::{table_from_csv, table_to_csv, VolumeFile, VolumeKind};
use maxtomo::locate::{moment_table, EffectiveMoment};
use maxtomo::medium::{refractive_index, RefractiveIndexField, SupportBox};
use maxtomo::patch::{BoundaryPatch, TangentialField};
use maxtomo::recon::{synthetic_table, LGrid, SSchedule};
use maxtomo::wave::WaveParams;
use maxtomo::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
}

fn faces() -> impl Strategy<Value = Vec<Face>> {
    proptest::sample::subsequence(
        vec![Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax],
        1..=6,
    )
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-12 * scale.max(1.0)
}

fn small_z() -> &'static ImpedanceOperator {
    static Z: OnceLock<ImpedanceOperator> = OnceLock::new();
    Z.get_or_init(|| {
        let g = BoxGrid::unit_cube(6).unwrap();
        let sb = SupportBox::new([0.3; 3], [0.7; 3]).unwrap();
        let n = RefractiveIndexField::from_fn(&g, C64::new(1.0, 0.0), sb, |x| {
            C64::new(1.2 + 0.3 * x[0], 0.1)
        })
        .unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        assemble_impedance(&n, &g, &top, &WaveParams::from_wavenumber(3.0).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_indexing_is_a_bijection(nx in 4usize..10, ny in 4usize..10, nz in 4usize..10, ex in 0.5f64..3.0) {
        let g = BoxGrid::new([ex, 1.0, 2.0], [nx, ny, nz]).unwrap();
        let mut seen = vec![false; g.n_edges()];
        for d in 0..3 {
            let s = g.edge_shape(d);
            for k in 0..s[2] { for j in 0..s[1] { for i in 0..s[0] {
                let idx = g.edge_index(d, [i, j, k]);
                prop_assert!(idx < g.n_edges() && !seen[idx]);
                prop_assert_eq!(g.edge_coords(idx), (d, [i, j, k]));
                seen[idx] = true;
            }}}
        }
        prop_assert!(seen.into_iter().all(|b| b));
        for a in 0..3 {
            prop_assert!((g.spacing()[a] * g.cells()[a] as f64 - g.extent()[a]).abs() <= 1e-12 * g.extent()[a]);
        }
    }

    #[test]
    fn admissible_inputs_give_admissible_index(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let g = BoxGrid::unit_cube(6).unwrap();
        let wp = WaveParams::from_wavenumber(2.0).unwrap();
        let sb = SupportBox::new([0.2; 3], [0.8; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut next = || rng.random::<f64>();
        let mut eps = vec![wp.eps0(); g.n_edges()];
        let mut sigma = vec![0.0; g.n_edges()];
        for e in 0..g.n_edges() {
            if sb.contains(g.edge_midpoint(e)) {
                eps[e] = wp.eps0() * scale * (1e-3 + next());
                sigma[e] = wp.omega() * wp.eps0() * scale * next();
            }
        }
        let n = refractive_index(&g, &eps, &sigma, &wp, Some(sb)).unwrap();
        prop_assert!(n.values().iter().all(|v| v.re > 0.0 && v.im >= 0.0));
        sigma[g.n_edges() / 2] = -1e-3;
        prop_assert!(refractive_index(&g, &eps, &sigma, &wp, Some(sb)).is_err());
    }

    #[test]
    fn extension_by_zero(faces in faces(), vals in proptest::collection::vec(c64(), 1..400)) {
        let g = BoxGrid::unit_cube(5).unwrap();
        let patch = Arc::new(BoundaryPatch::new(&g, &faces).unwrap());
        let full = Arc::new(BoundaryPatch::full(&g));
        let data: Vec<C64> = (0..patch.len()).map(|i| vals[i % vals.len()]).collect();
        let f = TangentialField::new(patch.clone(), data).unwrap();
        let x = f.extend_to(full.clone()).unwrap();
        for (&e, v) in full.dofs().iter().zip(x.values()) {
            match patch.slot(e) {
                Some(b) => prop_assert_eq!(*v, f.values()[b]),
                None => prop_assert_eq!(*v, C64::new(0.0, 0.0)),
            }
        }
    }

    #[test]
    fn cgo_algebra(k in 0.5f64..10.0, lx in -2.0f64..2.0, ly in -2.0f64..2.0, lz in -2.0f64..2.0, sf in 1.0f64..10.0) {
        let l = [lx * k, ly * k, lz * k];
        let s = sf * k;
        let p = cgo_pair(&CgoFrame::for_l(l, s, k).unwrap()).unwrap();
        let dot = |a: [C64; 3], b: [C64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let nrm = |a: [C64; 3]| a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for (xi, eta) in [(p.xi1, p.eta1), (p.xi2, p.eta2)] {
            prop_assert!((dot(xi, xi) - k * k).norm() <= 1e-12 * k * k);
            prop_assert!(dot(xi, eta).norm() <= 1e-10 * nrm(xi) * nrm(eta));
        }
        prop_assert!((dot(p.eta1, p.eta2) - 1.0).norm() <= 1e-12);
        let tol = 4.0 * f64::EPSILON * (0.5 * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt() + s);
        for i in 0..3 {
            prop_assert!((p.xi1[i] + p.xi2[i] - C64::new(0.0, l[i])).norm() <= tol);
        }
    }

    #[test]
    fn n_xi_is_linear(a in c64(), b in c64(), seed in 0usize..1000, lx in -5.0f64..5.0) {
        let g = BoxGrid::unit_cube(5).unwrap();
        let top = Arc::new(BoundaryPatch::top(&g));
        let p = cgo_pair(&CgoFrame::for_l([lx, 1.0, 0.5], 6.0, 3.0).unwrap()).unwrap();
        let f = TangentialField::new(top.clone(), (0..top.len()).map(|i| C64::new(((i + seed) as f64).sin(), 0.3)).collect()).unwrap();
        let h = TangentialField::new(top.clone(), (0..top.len()).map(|i| C64::new(0.1, ((i * seed) as f64).cos())).collect()).unwrap();
        let lhs = n_xi_apply(p.xi1, &f.combine(a, &h, b).unwrap());
        let rhs = n_xi_apply(p.xi1, &f).combine(a, &n_xi_apply(p.xi1, &h), b).unwrap();
        let scale = lhs.norm() + rhs.norm();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!(close(*x, *y, scale));
        }
    }

    #[test]
    fn impedance_is_linear(a in c64(), b in c64(), vals in proptest::collection::vec(c64(), 60)) {
        let z = small_z();
        let patch = z.patch().clone();
        let f = TangentialField::new(patch.clone(), vals[..patch.len()].to_vec()).unwrap();
        let h = TangentialField::new(patch.clone(), vals.iter().rev().take(patch.len()).copied().collect()).unwrap();
        let lhs = apply_impedance(z, &f.combine(a, &h, b).unwrap()).unwrap();
        let rhs = apply_impedance(z, &f).unwrap().combine(a, &apply_impedance(z, &h).unwrap(), b).unwrap();
        let scale = lhs.norm() + rhs.norm();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!(close(*x, *y, scale));
        }
    }

    #[test]
    fn translation_multiplies_transform_by_phase(q in c64(), dx in -0.1f64..0.1, dy in -0.1f64..0.1, dz in -0.1f64..0.1) {
        let g = BoxGrid::unit_cube(8).unwrap();
        let lg = LGrid::new(&g, 4.0, 8.0, SSchedule::default()).unwrap();
        let z = [0.45, 0.5, 0.55];
        let moved = [z[0] + dx, z[1] + dy, z[2] + dz];
        let a = moment_table(&lg, &[EffectiveMoment::isotropic(z, q, true)]);
        let b = moment_table(&lg, &[EffectiveMoment::isotropic(moved, q, true)]);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            let ph = C64::from_polar(1.0, x.l[0] * dx + x.l[1] * dy + x.l[2] * dz);
            prop_assert!((y.value - x.value * ph).norm() <= 1e-13 * x.value.norm().max(1e-300));
        }
    }

    #[test]
    fn volume_files_round_trip(nx in 1usize..6, ny in 1usize..6, nz in 1usize..6, bits in proptest::collection::vec(any::<u64>(), 250)) {
        let n = nx * ny * nz;
        let data: Vec<C64> = (0..n).map(|i| C64::new(f64::from_bits(bits[2 * i] >> 2), -f64::from_bits(bits[2 * i + 1] >> 2))).collect();
        let v = VolumeFile::new([nx, ny, nz], [0.1, 0.2, 0.3], VolumeKind::Contrast, data).unwrap();
        let bytes = v.to_bytes();
        prop_assert_eq!(VolumeFile::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn table_csv_round_trip(a in -1e6f64..1e6, b in -1e-9f64..1e-9) {
        let g = BoxGrid::unit_cube(8).unwrap();
        let lg = LGrid::new(&g, 4.0, 8.0, SSchedule::default()).unwrap();
        let t = synthetic_table(&lg, |l| C64::new(a * l[0].cos(), b + l[2]));
        let u = table_from_csv(&table_to_csv(&t)).unwrap();
        prop_assert_eq!(u, t);
    }
}
