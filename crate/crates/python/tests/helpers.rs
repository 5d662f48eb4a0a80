use num_rational::BigRational;
use topo_purity::{standard_partition, DomainString, Lattice, LatticeConfig, PartitionGeometry, Region};
use topo_purity_py::{oracle_for, ratio_report};

fn setup() -> (Lattice, topo_purity::Partition) {
    let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
    let p = standard_partition(
        &lat,
        PartitionGeometry {
            row: 2,
            col: 2,
            size: 8,
            thickness: 2,
        },
    )
    .unwrap();
    (lat, p)
}

#[test]
fn oracles_resolve_by_name() {
    let lat = Lattice::new(LatticeConfig::new(2, 2)).unwrap();
    let r = Region::plaquette(&lat, 0, 0);
    let p = |name: &str| oracle_for(&lat, name).unwrap().purity(&r).unwrap();
    let exact = p("group");
    assert_eq!(exact, BigRational::new(1.into(), 8.into()));
    assert_eq!(p("geometric"), exact);
    // the dense engine is floating point
    let dense = p("statevector") - &exact;
    assert!(dense.numer().bits() + 40 < dense.denom().bits(), "{dense}");
    assert!(oracle_for(&lat, "nope").is_err());
}

#[test]
fn ratio_report_matches_the_ground_state_value() {
    let (lat, p) = setup();
    let r = ratio_report(&lat, &p, &DomainString::empty(), "group", 1 << 10).unwrap();
    assert_eq!(r.ratio, BigRational::new(1.into(), 4.into()));
    let r = ratio_report(&lat, &p, &DomainString::empty(), "constant1", 1 << 10).unwrap();
    assert_eq!(r.ratio, BigRational::new(1.into(), 1.into()));
}
