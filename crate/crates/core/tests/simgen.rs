use tcgp_core::analysis::voxel_correlations;
use tcgp_core::simgen::{generate, generate_2d, generate_3d, Region, Shape, SimSpec2D};
use tcgp_core::Error;

fn ball(sign: i8, center: &[f64], radius: f64) -> Region {
    Region {
        sign,
        shape: Shape::Ball {
            center: center.to_vec(),
            radius,
        },
    }
}

#[test]
fn null_model_correlations_are_small() {
    let sim = generate(&[16, 16], 50, &[], (0.75, 0.85), 3).unwrap();
    assert!(sim.truth.sign.iter().all(|&s| s == 0));
    assert!(sim.truth.rho.iter().all(|&r| r == 0.0));
    let bound = 4.0 / 50f64.sqrt();
    let r = voxel_correlations(&sim.data);
    assert!(r.iter().all(|x| x.abs() < bound), "max {}", r.iter().fold(0.0f64, |a, b| a.max(b.abs())));
}

#[test]
fn design_regions_on_the_lattice() {
    let spec = SimSpec2D {
        side: 32,
        n: 5,
        ..Default::default()
    };
    let sim = generate_2d(&spec).unwrap();
    let centers = [([0.3, 0.7], 1i8), ([0.7, 0.7], 1), ([0.3, 0.3], 1), ([0.5, 0.5], -1), ([0.7, 0.3], -1)];
    for v in 0..sim.grid.m() {
        let x = sim.grid.coord(v);
        let mut want = 0;
        for (c, s) in centers {
            if (x[0] - c[0]).abs() + (x[1] - c[1]).abs() < 0.1 {
                want = s;
            }
        }
        assert_eq!(sim.truth.sign[v], want, "voxel {v} at {x:?}");
    }
    assert_eq!(SimSpec2D::STRONG, (0.75, 0.85));
    assert_eq!(SimSpec2D::WEAK, (0.15, 0.25));
}

#[test]
fn truth_rho_follows_the_variances() {
    let sim = generate(&[6, 6, 6], 3, &[ball(1, &[0.3, 0.3, 0.3], 0.3), ball(-1, &[0.8, 0.8, 0.8], 0.25)], (0.6, 0.9), 4).unwrap();
    for v in 0..sim.grid.m() {
        let x = sim.grid.coord(v);
        // κ(x, x) = Π exp(−0.2 x_a²)
        let k = x.iter().map(|a| (-0.2 * a * a).exp()).product::<f64>();
        let a = sim.truth.sigma_plus_sq[v] * k;
        let b = sim.truth.sigma_minus_sq[v] * k;
        let want = (a - b) / ((a + b + sim.truth.tau1_sq[v]) * (a + b + sim.truth.tau2_sq[v])).sqrt();
        assert!((sim.truth.rho[v] - want).abs() < 1e-14);
        assert_eq!(sim.truth.rho[v] != 0.0, sim.truth.sign[v] != 0);
        assert_eq!(sim.truth.rho[v].signum() as i8 * (sim.truth.sign[v] != 0) as i8, sim.truth.sign[v]);
    }
}

#[test]
fn ball_in_3d_carries_its_sign() {
    let regions = [ball(1, &[0.5, 0.5, 0.5], 0.35)];
    let sim = generate_3d(&[8, 8, 8], 60, &regions, (2.0, 0.0), 5).unwrap();
    let r = voxel_correlations(&sim.data);
    let inside: Vec<f64> = (0..sim.grid.m()).filter(|&v| sim.truth.sign[v] == 1).map(|v| r[v]).collect();
    let outside: Vec<f64> = (0..sim.grid.m()).filter(|&v| sim.truth.sign[v] == 0).map(|v| r[v]).collect();
    assert!(!inside.is_empty() && !outside.is_empty());
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    assert!(mean(&inside) > 0.3, "inside {}", mean(&inside));
    assert!(mean(&outside).abs() < 0.05);
    assert!(generate_3d(&[8, 8], 5, &[], (1.0, 1.0), 0).is_err());
}

#[test]
fn sample_correlation_tracks_truth_inside_regions() {
    let spec = SimSpec2D {
        side: 32,
        n: 200,
        seed: 6,
        ..Default::default()
    };
    let sim = generate_2d(&spec).unwrap();
    let r = voxel_correlations(&sim.data);
    for sign in [1i8, -1] {
        let vs: Vec<usize> = (0..sim.grid.m()).filter(|&v| sim.truth.sign[v] == sign).collect();
        let k = vs.len() as f64;
        let got = vs.iter().map(|&v| r[v]).sum::<f64>() / k;
        let want = vs.iter().map(|&v| sim.truth.rho[v]).sum::<f64>() / k;
        // region voxels share subjects, so allow for correlated error
        assert!((got - want).abs() < 0.06, "sign {sign}: sample {got:.3} truth {want:.3}");
    }
}

#[test]
fn covariances_match_the_generating_kernel() {
    let n = 3000;
    let regions = [Region {
        sign: 1,
        shape: Shape::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 0.5],
        },
    }];
    let sim = generate(&[6, 6], n, &regions, (1.5, 0.0), 7).unwrap();
    let m = sim.grid.m();
    let (y1, y2) = (sim.data.y1(), sim.data.y2());
    let cov = |a: &[f64], va: usize, b: &[f64], vb: usize| {
        let ma = (0..n).map(|i| a[i * m + va]).sum::<f64>() / n as f64;
        let mb = (0..n).map(|i| b[i * m + vb]).sum::<f64>() / n as f64;
        (0..n).map(|i| (a[i * m + va] - ma) * (b[i * m + vb] - mb)).sum::<f64>() / (n - 1) as f64
    };
    let kern = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).map(|(a, b)| (-0.1 * (a * a + b * b) - 10.0 * (a - b) * (a - b)).exp()).product::<f64>()
    };
    let t = &sim.truth;
    let mut worst = 0.0f64;
    for v in 0..m {
        let xv = sim.grid.coord(v);
        let s = t.sigma_plus_sq[v];
        let want11 = s * kern(xv, xv) + t.tau1_sq[v];
        let want22 = s * kern(xv, xv) + t.tau2_sq[v];
        let want12 = s * kern(xv, xv);
        for (got, want, scale) in [
            (cov(y1, v, y1, v), want11, want11),
            (cov(y2, v, y2, v), want22, want22),
            (cov(y1, v, y2, v), want12, (want11 * want22).sqrt()),
        ] {
            worst = worst.max((got - want).abs() / scale);
        }
        for u in sim.grid.face_neighbors(v) {
            let xu = sim.grid.coord(u);
            let want = (s * t.sigma_plus_sq[u]).sqrt() * kern(xv, xu);
            let scale = (want11 * (t.sigma_plus_sq[u] * kern(xu, xu) + t.tau1_sq[u])).sqrt();
            worst = worst.max((cov(y1, v, y1, u) - want).abs() / scale);
        }
    }
    // a normalized covariance has sd ≈ 1/√n ≈ 0.018; 36 voxels × ~6 checks
    assert!(worst < 0.085, "worst normalized deviation {worst}");
}

#[test]
fn generation_is_deterministic() {
    let spec = SimSpec2D {
        side: 12,
        n: 4,
        seed: 8,
        ..Default::default()
    };
    let a = generate_2d(&spec).unwrap();
    let b = generate_2d(&spec).unwrap();
    assert_eq!(a.data, b.data);
    assert_eq!(a.truth, b.truth);
    let c = generate_2d(&SimSpec2D { seed: 9, ..spec }).unwrap();
    assert_ne!(a.data, c.data);
}

#[test]
fn bad_designs_are_rejected() {
    let overlap = [ball(1, &[0.5, 0.5], 0.3), ball(-1, &[0.6, 0.5], 0.3)];
    assert!(matches!(generate(&[8, 8], 3, &overlap, (1.0, 1.0), 0), Err(Error::RegionOverlap(_))));
    let bad_sign = [Region {
        sign: 2,
        ..ball(1, &[0.5, 0.5], 0.3)
    }];
    assert!(generate(&[8, 8], 3, &bad_sign, (1.0, 1.0), 0).is_err());
    assert!(generate(&[8, 8], 3, &[ball(1, &[0.5, 0.5, 0.5], 0.3)], (1.0, 1.0), 0).is_err());
    assert!(generate(&[8, 8], 1, &[], (1.0, 1.0), 0).is_err());
    assert!(generate(&[8, 8], 3, &[], (-1.0, 1.0), 0).is_err());
    assert!(generate_2d(&SimSpec2D { side: 1, ..Default::default() }).is_err());
}
