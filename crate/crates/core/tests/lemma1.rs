mod common;

use common::*;
use hvz_core::symgroup::SymmetryType;
use hvz_core::system::{ClusterDecomposition, ParticleSystem, PotentialSpec};
use hvz_core::threshold::{lemma1_diagnostic, FiberGrid, Lemma1Region, ThresholdConfig};

fn t(s: &str) -> SymmetryType {
    SymmetryType::parse(s).unwrap()
}

fn grid(points: usize, box_len: f64) -> ThresholdConfig {
    ThresholdConfig {
        grid: FiberGrid {
            points,
            box_len,
            ..FiberGrid::default()
        },
        ..ThresholdConfig::default()
    }
}

#[test]
fn bosonic_pair_channel_is_simple_and_bound() {
    let sys = ParticleSystem::identical(3, 1.0, PotentialSpec::gaussian_well(-2.0, 1.0), 1);
    let z = ClusterDecomposition::new(&sys, vec![0, 1], vec![2]).unwrap();
    let region = Lemma1Region {
        center: vec![0.0],
        half_width: 0.6,
        points: 7,
    };
    let r = lemma1_diagnostic(&sys, &t("[3]"), &z, &region, &grid(64, 20.0), None).unwrap();
    assert!(r.hypothesis_i);
    assert!(r.hypothesis_ii);
    let dominant = r.dominant.as_ref().unwrap();
    assert_eq!((dominant.left.label(), dominant.right.label()), ("[2]".into(), "[1]".into()));
    assert_eq!(r.minimizers_h, 1);
    assert_eq!(r.minimizers_half_h, 1);
    assert!(r.region_contains_minimizer);

    // the pair level at each sample agrees with the dense symmetric sector
    for s in &r.samples {
        let p = -s.q[0];
        assert!((s.e1 - pair_ground(-2.0, 64, 20.0, p)).abs() < 1e-7, "{} vs oracle", s.e1);
    }
}

#[test]
fn square_lattice_p_wave_violates_simplicity() {
    let well = PotentialSpec::gaussian_well(-6.0, 1.5);
    let (n, l) = (16, 12.0);

    // dense oracle: the antisymmetric pair ground level at rest is a bound doublet
    let dense = Dense::new(&[1.0, 1.0], 2, n, l, &[0.0, 0.0]);
    let h = dense.hamiltonian(pr, &gaussian(-6.0, 1.5));
    let levels = sector_eigenvalues(&h, &dense.symmetrizer(true), 1e3);
    println!("p-wave levels {:?}", &levels[..3]);
    assert!(levels[0] < -1e-2);
    assert!((levels[1] - levels[0]).abs() < 1e-10);
    assert!(levels[2] - levels[1] > 1e-3);

    let sys = ParticleSystem::identical(3, 1.0, well, 2);
    let z = ClusterDecomposition::new(&sys, vec![0, 1], vec![2]).unwrap();
    let region = Lemma1Region {
        center: vec![0.0, 0.0],
        half_width: 0.3,
        points: 3,
    };
    let r = lemma1_diagnostic(&sys, &t("[1,1,1]"), &z, &region, &grid(n, l), None).unwrap();
    let rest = r.samples.iter().find(|s| s.q.iter().all(|q| q.abs() < 1e-12)).unwrap();
    assert!((rest.e1 - levels[0]).abs() < 1e-7);
    assert_eq!(rest.eigenspace_dimension, 2);
    assert_eq!(rest.components.len(), 1);
    assert_eq!(rest.components[0].multiplicity, 2);
    assert!(!r.hypothesis_ii);
}
