mod common;

use common::*;
use hvz_core::eigensolve::{degeneracy_cluster, lowest_eigenpairs, EigenOptions, IdentityProjection};
use hvz_core::fourier_grid::{kinetic_multiplier, FiberHamiltonian, Grid, GridSpec};
use hvz_core::symgroup::SymmetryType;
use hvz_core::system::{ClusterDecomposition, ParticleSystem, PotentialSpec};
use hvz_core::threshold::{cluster_energy, lambda_curve, mu_alpha, FiberGrid, ThresholdConfig};
use std::sync::Arc;

fn t(s: &str) -> SymmetryType {
    SymmetryType::parse(s).unwrap()
}

fn bosons(n: usize) -> ParticleSystem {
    ParticleSystem::identical(n, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1)
}

// lowest symmetric pair energy, gaussian well -2/1, P = 0, converged grid
const PAIR_GROUND: f64 = -1.042245221;

#[test]
fn pair_energy_matches_dense_oracle() {
    let oracle = pair_ground(-2.0, 64, 20.0, 0.0);
    let grid = FiberGrid {
        points: 256,
        box_len: 40.0,
        ..FiberGrid::default()
    };
    let e = cluster_energy(&bosons(2), &[0, 1], &t("[2]"), &[0.0], &grid, None).unwrap();
    println!("oracle {oracle:.12} solver {:.12}", e.energy);
    assert!((e.energy - oracle).abs() < 1e-4);
    assert!((e.energy - PAIR_GROUND).abs() < 1e-8);
}

#[test]
fn two_plus_one_curve_matches_oracle() {
    let sys = bosons(3);
    let z = ClusterDecomposition::new(&sys, vec![0, 1], vec![2]).unwrap();
    let qs: Vec<Vec<f64>> = [-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0].iter().map(|&q| vec![q]).collect();
    let curve = lambda_curve(&sys, &z, &t("[3]"), &qs, &ThresholdConfig::default(), None).unwrap();
    for s in &curve.samples {
        let q = s.q[0];
        let oracle = pair_ground(-2.0, 64, 20.0, -q) + pr(q * q, 1.0);
        assert!((s.lambda - oracle).abs() < 1e-4, "Q={q}: {} vs {oracle}", s.lambda);
        assert!(s.lambda >= curve.samples[3].lambda);
    }
    // a fine oracle scan is minimised at Q = 0
    let scan: Vec<(f64, f64)> = (-20..=20)
        .map(|i| {
            let q = i as f64 * 0.01;
            (q, pair_ground(-2.0, 64, 20.0, -q) + pr(q * q, 1.0))
        })
        .collect();
    let best = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(best.0, 0.0);
}

#[test]
fn three_boson_threshold_matches_oracle() {
    let oracle = (0..=400)
        .map(|i| {
            let q = -5.0 + i as f64 * 0.025;
            pair_ground(-2.0, 64, 20.0, -q) + pr(q * q, 1.0)
        })
        .fold(f64::INFINITY, f64::min);
    let report = mu_alpha(&bosons(3), &t("[3]"), &ThresholdConfig::default(), None).unwrap();
    println!("oracle {oracle:.12} mu {:.12}", report.mu);
    assert!((report.mu - oracle).abs() < 1e-4);
    assert!((report.mu - PAIR_GROUND).abs() < 1e-6);
    assert_eq!(report.minimizing.len(), 1);
    assert_eq!(report.gamma().len(), 1);
    assert!(report.gamma()[0].q[0].abs() < 1e-12);
    assert!(report.decompositions.iter().all(|d| d.boundary_ok == Some(true)));
}

#[test]
fn double_well_levels_group_by_tolerance() {
    let well = |r: f64| -3.0 * ((-(r - 3.0) * (r - 3.0)).exp());
    let dense = Dense::new(&[1.0, 1.0], 1, 32, 16.0, &[0.0]);
    let exact = eigenvalues(dense.hamiltonian(pr, &|_, _, r| well(r)));

    let spec = GridSpec::new(1, vec![0, 1], 32, 16.0, vec![0.0]).unwrap();
    let kinetic = kinetic_multiplier(&spec, &[1.0, 1.0]).unwrap();
    let h = spec.spacing();
    let potential: Vec<f64> = (0..32)
        .map(|i| {
            let x = if i < 16 { i as f64 } else { i as f64 - 32.0 } * h;
            well(x.abs())
        })
        .collect();
    let ham = FiberHamiltonian::new(Arc::new(Grid::new(spec).unwrap()), kinetic, potential).unwrap();
    let res = lowest_eigenpairs(&ham, &IdentityProjection, 3, &EigenOptions::default()).unwrap();
    for i in 0..3 {
        assert!((res.eigenvalues[i] - exact[i]).abs() < 1e-8);
    }
    let split = exact[1] - exact[0];
    println!("levels {:?} splitting {split:e}", &exact[..3]);
    assert!(split > 1e-7 && split < 1e-2);
    assert_eq!(degeneracy_cluster(&res, 1e-2)[0], vec![0, 1]);
    assert_eq!(degeneracy_cluster(&res, 1e-8)[0], vec![0]);
}
