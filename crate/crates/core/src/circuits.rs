//! Domain strings and the safety classifier.
//!
//! A string `[X_1, ..., X_k]` lists twirl domains in circuit order. Safety is
//! decided on the reversed string: a chain is an increasing sequence of
//! positions in it whose consecutive domains are linked (the earlier one meets
//! the later one or its outer layer). A string is unsafe when a single chain
//! runs between a pair of markers, or when two chains starting on the two
//! markers of a pair end on overlapping domains. The marker pairs are the
//! outer/inner rims of `ABC`, `(A, C)` and `(B_left, B_right)`.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::partition::{Marker, Partition, PartitionGeometry};
use crate::region::Region;

/// Ordered twirl domains, in circuit order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainString {
    domains: Vec<Region>,
}

impl DomainString {
    pub fn new(domains: Vec<Region>) -> Result<Self> {
        if let Some(i) = domains.iter().position(Region::is_empty) {
            return Err(Error::Config(format!("domain {i} of the string is empty")));
        }
        if let Some(first) = domains.first() {
            if let Some(bad) = domains.iter().find(|d| d.universe() != first.universe()) {
                return Err(Error::LatticeMismatch {
                    expected: first.universe(),
                    found: bad.universe(),
                });
            }
        }
        Ok(DomainString { domains })
    }

    pub fn empty() -> Self {
        DomainString::default()
    }

    pub fn domains(&self) -> &[Region] {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn reversed(&self) -> DomainString {
        DomainString {
            domains: self.domains.iter().rev().cloned().collect(),
        }
    }

    /// Length of the longest chain of the reversed string.
    pub fn chain_depth(&self, lattice: &Lattice) -> usize {
        let rev = self.reversed();
        let links = LinkTable::new(&reaches(lattice, rev.domains()));
        let mut best = vec![1usize; rev.len()];
        for j in 0..rev.len() {
            for i in 0..j {
                if links.linked(i, j) {
                    best[j] = best[j].max(best[i] + 1);
                }
            }
        }
        best.into_iter().max().unwrap_or(0)
    }
}

pub fn reverse(s: &DomainString) -> DomainString {
    s.reversed()
}

/// Each domain with its outer layer. Two bond sets count as touching when
/// their reaches meet: a bond adjacent to both can be sealed off between
/// them.
fn reaches(lattice: &Lattice, domains: &[Region]) -> Vec<Region> {
    domains.iter().map(|d| d | &d.outer_layer(lattice)).collect()
}

struct LinkTable {
    n: usize,
    links: Vec<bool>,
}

impl LinkTable {
    fn new(reach: &[Region]) -> Self {
        let n = reach.len();
        let mut links = vec![false; n * n];
        for i in 0..n {
            for j in i + 1..n {
                links[i * n + j] = reach[i].intersects(&reach[j]);
            }
        }
        LinkTable { n, links }
    }

    fn linked(&self, i: usize, j: usize) -> bool {
        i < j && self.links[i * self.n + j]
    }

    /// Shortest chain from `start` to every reachable position, as parents.
    fn chains_from(&self, start: usize) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.n];
        parent[start] = Some(start);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for (j, slot) in parent.iter_mut().enumerate().skip(i + 1) {
                if slot.is_none() && self.linked(i, j) {
                    *slot = Some(i);
                    queue.push_back(j);
                }
            }
        }
        parent
    }
}

fn unwind(parent: &[Option<usize>], end: usize) -> Vec<usize> {
    let mut path = vec![end];
    let mut cur = end;
    while let Some(p) = parent[cur] {
        if p == cur {
            break;
        }
        path.push(p);
        cur = p;
    }
    path.reverse();
    path
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarkerPair {
    Rims,
    AC,
    BLeftBRight,
}

impl MarkerPair {
    pub const ALL: [MarkerPair; 3] = [MarkerPair::Rims, MarkerPair::AC, MarkerPair::BLeftBRight];

    pub fn markers(self) -> (Marker, Marker) {
        match self {
            MarkerPair::Rims => (Marker::Outer, Marker::Inner),
            MarkerPair::AC => (Marker::A, Marker::C),
            MarkerPair::BLeftBRight => (Marker::BLeft, Marker::BRight),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Two chains from the paired markers end on overlapping domains.
    MeetingChains(MarkerPair),
    /// One chain runs from one marker of the pair to the other.
    SingleChain(MarkerPair),
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::MeetingChains(MarkerPair::Rims) => "I.i",
            Condition::MeetingChains(MarkerPair::AC) => "I.ii(A,C)",
            Condition::MeetingChains(MarkerPair::BLeftBRight) => "I.ii(B_left,B_right)",
            Condition::SingleChain(MarkerPair::Rims) => "II.a",
            Condition::SingleChain(MarkerPair::AC) => "II.b(A,C)",
            Condition::SingleChain(MarkerPair::BLeftBRight) => "II.b(B_left,B_right)",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        let all = MarkerPair::ALL
            .into_iter()
            .flat_map(|p| [Condition::MeetingChains(p), Condition::SingleChain(p)]);
        all.into_iter().find(|c| c.tag() == tag)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A chain given as positions in the circuit-order string, listed in the
/// order the chain is traversed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub start: Marker,
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub first: Chain,
    /// The second chain for meeting-chain violations.
    pub second: Option<Chain>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyVerdict {
    pub violation: Option<Violation>,
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        self.violation.is_none()
    }

    pub fn tag(&self) -> Option<&'static str> {
        self.violation.as_ref().map(|v| v.condition.tag())
    }
}

impl fmt::Display for SafetyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(v) = &self.violation else {
            return write!(f, "SAFE");
        };
        let chain = |c: &Chain| {
            let pos: Vec<String> = c.positions.iter().map(|p| p.to_string()).collect();
            format!("{} -> [{}]", c.start.name(), pos.join(", "))
        };
        write!(f, "UNSAFE condition {}\n  chain: {}", v.condition, chain(&v.first))?;
        if let Some(s) = &v.second {
            write!(f, "\n  chain: {}", chain(s))?;
        }
        Ok(())
    }
}

/// Decides whether the string keeps the annulus intact. Violations are
/// reported in a fixed order: single chains before meeting chains, pairs in
/// the order rims, `(A, C)`, `(B_left, B_right)`, both directions of each
/// pair, lower start positions first.
pub fn classify(lattice: &Lattice, string: &DomainString, partition: &Partition) -> Result<SafetyVerdict> {
    if !partition.is_labeled() {
        return Err(Error::Precondition(
            "classification needs an annular partition with labelled rims".into(),
        ));
    }
    if let Some(d) = string.domains().first() {
        if d.universe() != lattice.num_edges() {
            return Err(Error::LatticeMismatch {
                expected: lattice.num_edges(),
                found: d.universe(),
            });
        }
    }
    let k = string.len();
    let rev = string.reversed();
    let reach = reaches(lattice, rev.domains());
    let links = LinkTable::new(&reach);
    let parents: Vec<Vec<Option<usize>>> = (0..k).map(|i| links.chains_from(i)).collect();
    let to_circuit = |path: Vec<usize>| path.into_iter().map(|p| k - 1 - p).collect::<Vec<_>>();

    let mut touching = std::collections::HashMap::new();
    for m in [
        Marker::Outer,
        Marker::Inner,
        Marker::A,
        Marker::C,
        Marker::BLeft,
        Marker::BRight,
    ] {
        let region = partition.marker(lattice, m)?;
        let hits: Vec<bool> = reach.iter().map(|d| d.intersects(&region)).collect();
        touching.insert(m, hits);
    }

    for pair in MarkerPair::ALL {
        let (m1, m2) = pair.markers();
        for (from, to) in [(m1, m2), (m2, m1)] {
            for start in (0..k).filter(|&i| touching[&from][i]) {
                if let Some(end) = (start..k).find(|&j| parents[start][j].is_some() && touching[&to][j]) {
                    return Ok(SafetyVerdict {
                        violation: Some(Violation {
                            condition: Condition::SingleChain(pair),
                            first: Chain {
                                start: from,
                                positions: to_circuit(unwind(&parents[start], end)),
                            },
                            second: None,
                        }),
                    });
                }
            }
        }
    }

    for pair in MarkerPair::ALL {
        let (m1, m2) = pair.markers();
        for s1 in (0..k).filter(|&i| touching[&m1][i]) {
            for s2 in (0..k).filter(|&i| touching[&m2][i]) {
                for e1 in (s1..k).filter(|&j| parents[s1][j].is_some()) {
                    for e2 in (s2..k).filter(|&j| parents[s2][j].is_some()) {
                        if reach[e1].intersects(&reach[e2]) {
                            return Ok(SafetyVerdict {
                                violation: Some(Violation {
                                    condition: Condition::MeetingChains(pair),
                                    first: Chain {
                                        start: m1,
                                        positions: to_circuit(unwind(&parents[s1], e1)),
                                    },
                                    second: Some(Chain {
                                        start: m2,
                                        positions: to_circuit(unwind(&parents[s2], e2)),
                                    }),
                                }),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(SafetyVerdict { violation: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    Plaquette,
    Disk { radius: usize },
}

impl DomainShape {
    pub fn at(self, lattice: &Lattice, row: isize, col: isize) -> Region {
        match self {
            DomainShape::Plaquette => Region::plaquette(lattice, row, col),
            DomainShape::Disk { radius } => Region::disk(lattice, row, col, radius),
        }
    }
}

pub const DEFAULT_REJECTION_CAP: usize = 100_000;

fn draw_string(lattice: &Lattice, length: usize, shapes: &[DomainShape], rng: &mut ChaCha8Rng) -> Result<DomainString> {
    let l = lattice.size() as i64;
    let domains = (0..length)
        .map(|_| {
            let shape = shapes[rng.random_range(0..shapes.len())];
            let (r, c) = (rng.random_range(0..l), rng.random_range(0..l));
            shape.at(lattice, r as isize, c as isize)
        })
        .collect();
    DomainString::new(domains)
}

/// `length` domains at uniform positions, with no safety filter.
pub fn random_string(lattice: &Lattice, length: usize, shapes: &[DomainShape], seed: u64) -> Result<DomainString> {
    if shapes.is_empty() && length > 0 {
        return Err(Error::Config("no domain shapes to sample from".into()));
    }
    draw_string(lattice, length, shapes, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Samples strings of `length` domains at uniform positions until one is
/// safe. Returns the string and the number of rejected draws.
pub fn random_shallow_string(
    lattice: &Lattice,
    partition: &Partition,
    length: usize,
    shapes: &[DomainShape],
    seed: u64,
    rejection_cap: usize,
) -> Result<(DomainString, usize)> {
    if shapes.is_empty() && length > 0 {
        return Err(Error::Config("no domain shapes to sample from".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for rejected in 0..=rejection_cap {
        let s = draw_string(lattice, length, shapes, &mut rng)?;
        if classify(lattice, &s, partition)?.is_safe() {
            return Ok((s, rejected));
        }
    }
    Err(Error::Budget(format!(
        "no safe string of length {length} after {rejection_cap} rejections"
    )))
}

/// A column of hole plaquettes from the inner edge of the top band to the
/// inner edge of the bottom band, listed so that the reversed string walks
/// from `A` to `C`.
pub fn make_bridge(lattice: &Lattice, geom: PartitionGeometry) -> Result<DomainString> {
    let t = geom.thickness as isize;
    let s = geom.size as isize;
    let col = geom.col + s / 2;
    let rows = (geom.row + t)..(geom.row + s - t);
    let walk: Vec<Region> = rows.map(|r| Region::plaquette(lattice, r, col)).collect();
    DomainString::new(walk).map(|s| s.reversed())
}

/// Two chains severing the top band by clearing every bond at one vertex
/// column, so the two sides keep no star in common. Each leg holds the
/// bond leaving `ABC` at one rim plus the band bonds of the three vertex
/// rows nearest that rim; the shared domain holds the bonds in between,
/// overlapping both legs. Twirling the legs first and the shared domain
/// last can strip the whole column. The shared domain comes last in the
/// reversed string so the two chains never join into one. Keeping the legs
/// apart and the shared domain clear of both rims needs a band at least six
/// plaquettes thick.
pub fn make_cut(lattice: &Lattice, geom: PartitionGeometry) -> Result<DomainString> {
    use crate::lattice::Orientation::{Horizontal as H, Vertical as V};
    if geom.thickness < 6 {
        return Err(Error::Config(
            "the cut construction needs a band at least six plaquettes thick".into(),
        ));
    }
    let outer = geom.row;
    let inner = geom.row + geom.thickness as isize;
    let col = geom.col + geom.size as isize / 2;
    let rungs = |r: isize| [(r, col - 1, H), (r, col, H)];
    let mut outer_leg: Vec<_> = (outer - 1..outer + 2).map(|r| (r, col, V)).collect();
    outer_leg.extend((outer..outer + 3).flat_map(rungs));
    let mut inner_leg: Vec<_> = (inner - 2..inner + 1).map(|r| (r, col, V)).collect();
    inner_leg.extend((inner - 2..inner + 1).flat_map(rungs));
    let mut run: Vec<_> = (outer + 2..inner - 1).flat_map(rungs).collect();
    run.extend((outer + 2..inner - 2).map(|r| (r, col, V)));
    DomainString::new(vec![
        Region::from_triples(lattice, &run)?,
        Region::from_triples(lattice, &inner_leg)?,
        Region::from_triples(lattice, &outer_leg)?,
    ])
}

/// Plaquettes inside the hole joining the inner edge of `A` to the inner
/// edge of `B_left` around the top-left hole corner.
pub fn make_arch(lattice: &Lattice, geom: PartitionGeometry) -> Result<DomainString> {
    let t = geom.thickness as isize;
    let (r, c) = (geom.row + t, geom.col + t);
    DomainString::new(vec![
        Region::plaquette(lattice, r, c + 2),
        Region::plaquette(lattice, r + 2, c),
        Region::plaquette(lattice, r + 1, c + 1),
    ])
    .map(|s| s.reversed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeConfig;
    use crate::partition::standard_partition;

    fn setup() -> (Lattice, Partition, PartitionGeometry) {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let geom = PartitionGeometry {
            row: 2,
            col: 2,
            size: 8,
            thickness: 2,
        };
        let p = standard_partition(&lat, geom).unwrap();
        (lat, p, geom)
    }

    fn thick_setup() -> (Lattice, Partition, PartitionGeometry) {
        let lat = Lattice::new(LatticeConfig::new(24, 2)).unwrap();
        let geom = PartitionGeometry {
            row: 2,
            col: 2,
            size: 18,
            thickness: 6,
        };
        let p = standard_partition(&lat, geom).unwrap();
        (lat, p, geom)
    }

    #[test]
    fn reversal() {
        let (lat, _, _) = setup();
        let xs: Vec<Region> = (0..3).map(|i| Region::plaquette(&lat, 0, i)).collect();
        let s = DomainString::new(xs.clone()).unwrap();
        assert_eq!(s.reversed().domains(), &[xs[2].clone(), xs[1].clone(), xs[0].clone()]);
        assert_eq!(s.reversed().reversed(), s);
        let one = DomainString::new(vec![xs[0].clone()]).unwrap();
        assert_eq!(reverse(&one), one);
    }

    #[test]
    fn rejects_empty_domains() {
        let (lat, _, _) = setup();
        assert!(DomainString::new(vec![Region::empty(lat.num_edges())]).is_err());
    }

    #[test]
    fn bulk_plaquette_is_safe() {
        let (lat, p, _) = setup();
        // inside D, far from the annulus
        let s = DomainString::new(vec![Region::plaquette(&lat, 11, 11)]).unwrap();
        assert!(classify(&lat, &s, &p).unwrap().is_safe());
        assert!(classify(&lat, &DomainString::empty(), &p).unwrap().is_safe());
    }

    #[test]
    fn bridge_is_single_chain_between_a_and_c() {
        let (lat, p, g) = setup();
        let v = classify(&lat, &make_bridge(&lat, g).unwrap(), &p).unwrap();
        assert_eq!(v.tag(), Some("II.b(A,C)"), "{v}");
    }

    #[test]
    fn cut_is_meeting_chains_between_rims() {
        let (lat, p, g) = thick_setup();
        let v = classify(&lat, &make_cut(&lat, g).unwrap(), &p).unwrap();
        assert_eq!(v.tag(), Some("I.i"), "{v}");
        let w = v.violation.unwrap();
        assert_eq!(w.first.start, Marker::Outer);
        assert_eq!(w.second.unwrap().start, Marker::Inner);
        let (lat2, _, g2) = setup();
        assert!(make_cut(&lat2, g2).is_err());
    }

    #[test]
    fn arch_is_safe_when_the_hole_is_wide() {
        let lat = Lattice::new(LatticeConfig::new(18, 2)).unwrap();
        let g = PartitionGeometry {
            row: 2,
            col: 2,
            size: 12,
            thickness: 2,
        };
        let p = standard_partition(&lat, g).unwrap();
        assert!(classify(&lat, &make_arch(&lat, g).unwrap(), &p).unwrap().is_safe());
        // a four-plaquette hole leaves the arch within reach of C
        let (lat, p, g) = setup();
        let v = classify(&lat, &make_arch(&lat, g).unwrap(), &p).unwrap();
        assert_eq!(v.tag(), Some("II.b(A,C)"));
    }

    #[test]
    fn band_spanning_disk_is_unsafe() {
        let (lat, p, _) = setup();
        // a 2x2 block covering the whole width of the top band
        let s = DomainString::new(vec![Region::disk(&lat, 3, 6, 1)]).unwrap();
        let v = classify(&lat, &s, &p).unwrap();
        assert_eq!(v.tag(), Some("II.a"));
    }

    #[test]
    fn order_matters_for_chains() {
        let (lat, p, g) = thick_setup();
        // the same three domains with the shared one acting last in the
        // reversed order form two meeting chains; putting it first lets a
        // single chain run across
        let cut = make_cut(&lat, g).unwrap();
        let mut doms = cut.domains().to_vec();
        doms.rotate_left(1);
        let shuffled = DomainString::new(doms).unwrap();
        let v = classify(&lat, &shuffled, &p).unwrap();
        assert_ne!(v.tag(), Some("I.i"));
    }

    #[test]
    fn unlabeled_partition_is_rejected() {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let p = crate::partition::simply_connected_partition(&lat, 3, 1, 4, [3, 3, 3]).unwrap();
        assert!(matches!(
            classify(&lat, &DomainString::empty(), &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn random_strings_are_safe_and_deterministic() {
        let (lat, p, _) = setup();
        let shapes = [DomainShape::Plaquette];
        let (a, _) = random_shallow_string(&lat, &p, 5, &shapes, 3, DEFAULT_REJECTION_CAP).unwrap();
        let (b, _) = random_shallow_string(&lat, &p, 5, &shapes, 3, DEFAULT_REJECTION_CAP).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(classify(&lat, &a, &p).unwrap().is_safe());
        let (e, n) = random_shallow_string(&lat, &p, 0, &shapes, 3, 10).unwrap();
        assert!(e.is_empty() && n == 0);
    }

    #[test]
    fn chain_depth_counts_linked_runs() {
        let (lat, _, g) = setup();
        let bridge = make_bridge(&lat, g).unwrap();
        assert_eq!(bridge.chain_depth(&lat), bridge.len());
        let apart = DomainString::new(vec![Region::plaquette(&lat, 0, 0), Region::plaquette(&lat, 6, 6)]).unwrap();
        assert_eq!(apart.chain_depth(&lat), 1);
    }

    #[test]
    fn condition_tags_round_trip() {
        for pair in MarkerPair::ALL {
            for c in [Condition::MeetingChains(pair), Condition::SingleChain(pair)] {
                assert_eq!(Condition::from_tag(c.tag()), Some(c));
            }
        }
    }
}
