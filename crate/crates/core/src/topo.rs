//! The four-region purity ratio `P_AB P_BC / (P_B P_ABC)`.

use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::circuits::{classify, DomainString};
use crate::error::{Error, Result};
use crate::group_purity::{log_exact, pow_rational, rational_to_f64, GroupOracle, PurityOracle};
use crate::lattice::Lattice;
use crate::partition::{Composite, Marker, Partition};
use crate::region::{boundary_stats, Region};
use crate::swap_dynamics::{apply_string, evaluate, evolve_tracked, Branch, SwapCombo, TrackedTerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Ratio equals `d^-2`.
    Topological,
    /// Ratio equals 1.
    Trivial,
    Other,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Topological => "topological",
            Phase::Trivial => "trivial",
            Phase::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoEntry {
    pub composite: Composite,
    pub value: BigRational,
    /// Number of swap terms behind the value (1 without evolution).
    pub terms: usize,
}

impl TopoEntry {
    pub fn exponent(&self, dim: u32) -> Option<i64> {
        log_exact(&self.value, dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoReport {
    pub dim: u32,
    /// In the order AB, BC, B, ABC.
    pub entries: [TopoEntry; 4],
    pub ratio: BigRational,
    pub phase: Phase,
}

impl TopoReport {
    fn from_entries(dim: u32, entries: [TopoEntry; 4]) -> Result<Self> {
        let ratio = ratio_of(&entries)?;
        let phase = if ratio == pow_rational(dim, -2) {
            Phase::Topological
        } else if ratio.is_one() {
            Phase::Trivial
        } else {
            Phase::Other
        };
        Ok(TopoReport {
            dim,
            entries,
            ratio,
            phase,
        })
    }

    pub fn entry(&self, which: Composite) -> &TopoEntry {
        &self.entries[Composite::ALL.iter().position(|&c| c == which).unwrap()]
    }

    /// `log2 d`.
    pub fn gamma_expected(&self) -> f64 {
        (self.dim as f64).log2()
    }

    pub fn ratio_f64(&self) -> f64 {
        rational_to_f64(&self.ratio)
    }

    /// `k` with ratio `= d^k`, when exact.
    pub fn ratio_exponent(&self) -> Option<i64> {
        log_exact(&self.ratio, self.dim)
    }

    /// `-log2` of the ratio: the Renyi-2 combination `S_AB + S_BC - S_B - S_ABC`.
    pub fn renyi_combination(&self) -> f64 {
        -self.ratio_f64().log2()
    }

    /// Recomputes the ratio from the entries.
    pub fn is_consistent(&self) -> bool {
        ratio_of(&self.entries).is_ok_and(|r| r == self.ratio)
    }

    pub fn ratio_string(&self) -> String {
        format_power(&self.ratio, self.dim)
    }
}

/// `"d^k (x)"` for exact powers of `d`, otherwise `"p/q (x)"`.
pub fn format_power(x: &BigRational, dim: u32) -> String {
    let f = rational_to_f64(x);
    match log_exact(x, dim) {
        Some(0) => format!("1 ({f})"),
        Some(k) => format!("{dim}^{k} ({f})"),
        None => format!("{x} ({f})"),
    }
}

impl fmt::Display for TopoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "P_{:<3} = {}  [{} terms]",
                e.composite.name(),
                format_power(&e.value, self.dim),
                e.terms
            )?;
        }
        write!(f, "ratio = {}  ({})", self.ratio_string(), self.phase.name())
    }
}

fn ratio_of(entries: &[TopoEntry; 4]) -> Result<BigRational> {
    let den = &entries[2].value * &entries[3].value;
    if den.is_zero() {
        return Err(Error::Assertion("vanishing denominator purity".into()));
    }
    Ok(&entries[0].value * &entries[1].value / den)
}

fn check_partition(lattice: &Lattice, partition: &Partition) -> Result<()> {
    if partition.abc.universe() != lattice.num_edges() {
        return Err(Error::LatticeMismatch {
            expected: lattice.num_edges(),
            found: partition.abc.universe(),
        });
    }
    if partition.b.is_empty() || partition.abc.is_full() {
        return Err(Error::Precondition("degenerate partition".into()));
    }
    Ok(())
}

/// Ratio of the four purities of the state described by `oracle`.
pub fn topological_purity(lattice: &Lattice, oracle: &dyn PurityOracle, partition: &Partition) -> Result<TopoReport> {
    check_partition(lattice, partition)?;
    let entries = Composite::ALL.map(|c| -> Result<TopoEntry> {
        Ok(TopoEntry {
            composite: c,
            value: oracle.purity(partition.composite(c))?,
            terms: 1,
        })
    });
    let [a, b, c, d] = entries;
    TopoReport::from_entries(lattice.dim(), [a?, b?, c?, d?])
}

/// The four swap combos after evolving under the reversed string.
pub fn evolved_combos(
    lattice: &Lattice,
    partition: &Partition,
    string: &DomainString,
    term_cap: usize,
) -> Result<Vec<SwapCombo>> {
    Composite::ALL
        .par_iter()
        .map(|&c| apply_string(&SwapCombo::swap(lattice, partition.composite(c))?, string, term_cap))
        .collect()
}

/// Ratio obtained by evaluating already evolved combos against `oracle`.
pub fn report_from_combos(dim: u32, combos: &[SwapCombo], oracle: &dyn PurityOracle) -> Result<TopoReport> {
    if combos.len() != 4 {
        return Err(Error::Precondition(format!("expected 4 combos, got {}", combos.len())));
    }
    let values: Vec<BigRational> = combos.par_iter().map(|c| evaluate(c, oracle)).collect::<Result<_>>()?;
    let mut it = Composite::ALL.into_iter().zip(values.into_iter().zip(combos));
    let mut next = || {
        let (composite, (value, combo)) = it.next().unwrap();
        TopoEntry {
            composite,
            value,
            terms: combo.len(),
        }
    };
    let entries = [next(), next(), next(), next()];
    TopoReport::from_entries(dim, entries)
}

/// Ratio of evolved swap expectations, each a combination of purities of the
/// initial state.
pub fn evolved_topological_purity(
    lattice: &Lattice,
    oracle: &dyn PurityOracle,
    partition: &Partition,
    string: &DomainString,
    term_cap: usize,
) -> Result<TopoReport> {
    check_partition(lattice, partition)?;
    let combos = evolved_combos(lattice, partition, string, term_cap)?;
    report_from_combos(lattice.dim(), &combos, oracle)
}

/// Ratio along a single trajectory: for each composite, the evolved term
/// whose history takes `prefer` most often. Returns the ratio and the four
/// selected regions.
pub fn extremal_trajectory_ratio(
    lattice: &Lattice,
    oracle: &dyn PurityOracle,
    partition: &Partition,
    string: &DomainString,
    prefer: Branch,
    term_cap: usize,
) -> Result<(BigRational, [Region; 4])> {
    check_partition(lattice, partition)?;
    let picks = Composite::ALL.map(|c| -> Result<Region> {
        let terms = evolve_tracked(lattice.dim(), partition.composite(c), string, term_cap)?;
        terms
            .into_iter()
            .max_by_key(|t| t.path.iter().filter(|&&b| b == prefer).count())
            .map(|t| t.region)
            .ok_or_else(|| Error::Assertion("evolution left no terms".into()))
    });
    let [ab, bc, b, abc] = picks;
    let regions = [ab?, bc?, b?, abc?];
    let p: Vec<BigRational> = regions.iter().map(|r| oracle.purity(r)).collect::<Result<_>>()?;
    let den = &p[2] * &p[3];
    if den.is_zero() {
        return Err(Error::Assertion("zero denominator on trajectory".into()));
    }
    Ok((&p[0] * &p[1] / den, regions))
}

/// Outcome of a boundary deformation test.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationOutcome {
    pub before: BigRational,
    pub after: BigRational,
    /// Piece that absorbed the deformation.
    pub host: Marker,
}

impl DeformationOutcome {
    pub fn unchanged(&self) -> bool {
        self.before == self.after
    }
}

/// Grows `ABC` by `deformation`, attaching the new bonds to the piece they
/// touch (`A`, then `C`, then the arms), and compares ratios. The
/// deformation must reach exactly one rim of `ABC` and keep the annulus
/// intact.
pub fn deform_boundary(
    lattice: &Lattice,
    oracle: &GroupOracle,
    partition: &Partition,
    deformation: &Region,
) -> Result<DeformationOutcome> {
    let before = topological_purity(lattice, oracle, partition)?.ratio;
    if deformation.is_empty() {
        return Ok(DeformationOutcome {
            after: before.clone(),
            before,
            host: Marker::A,
        });
    }
    let rims = [Marker::Outer, Marker::Inner]
        .into_iter()
        .map(|m| Ok(deformation.intersects(&partition.marker(lattice, m)?)))
        .collect::<Result<Vec<bool>>>()?;
    let hit = rims.iter().filter(|&&b| b).count();
    if hit != 1 {
        return Err(Error::Precondition(format!(
            "deformation must reach exactly one rim of ABC, it reaches {hit}"
        )));
    }
    let verdict = classify(lattice, &DomainString::new(vec![deformation.clone()])?, partition)?;
    if let Some(v) = verdict.violation {
        return Err(Error::Precondition(format!(
            "deformation changes the topology of ABC (condition {})",
            v.condition
        )));
    }
    let added = deformation - &partition.abc;
    let mut pieces = [
        (Marker::A, partition.a.clone()),
        (Marker::C, partition.c.clone()),
        (Marker::BLeft, partition.b_left.clone()),
        (Marker::BRight, partition.b_right.clone()),
    ];
    let mut host = None;
    for (m, piece) in pieces.iter_mut() {
        if !piece.is_empty() && added.intersects(&(&*piece | &piece.outer_layer(lattice))) {
            *piece = &*piece | &added;
            host = Some(*m);
            break;
        }
    }
    let host = match host {
        Some(h) => h,
        None if added.is_empty() => Marker::A,
        None => {
            return Err(Error::Precondition(
                "deformation does not touch any piece of ABC".into(),
            ))
        }
    };
    let [(_, a), (_, c), (_, bl), (_, br)] = pieces;
    let deformed = Partition::from_pieces(lattice, a, bl, br, c)?;
    let after = topological_purity(lattice, oracle, &deformed)?.ratio;
    Ok(DeformationOutcome { before, after, host })
}

/// Whether a local boundary deformation leaves the ratio unchanged.
pub fn deformation_keeps_ratio(
    lattice: &Lattice,
    oracle: &GroupOracle,
    partition: &Partition,
    deformation: &Region,
) -> Result<bool> {
    Ok(deform_boundary(lattice, oracle, partition, deformation)?.unchanged())
}

/// Result of matching evolved terms across the four combos.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairingReport {
    pub quadruples: usize,
    pub coefficient_mismatches: usize,
    pub length_mismatches: usize,
    pub exponent_mismatches: usize,
    pub unmatched: usize,
    pub first_failure: Option<String>,
}

impl PairingReport {
    pub fn passed(&self) -> bool {
        self.quadruples > 0
            && self.coefficient_mismatches == 0
            && self.length_mismatches == 0
            && self.exponent_mismatches == 0
            && self.unmatched == 0
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        if self.first_failure.is_none() {
            self.first_failure = Some(msg());
        }
    }
}

/// Which pair of combos share branch choices on a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// `AB` follows `ABC`, `BC` follows `B`.
    A,
    /// `AB` follows `B`, `BC` follows `ABC`.
    C,
}

/// Side of each reversed-string step. Domains are grouped by mutual
/// contiguity; a group reaching `A` pairs the combos containing `A`.
fn step_sides(lattice: &Lattice, partition: &Partition, string: &DomainString) -> Result<Vec<Side>> {
    let rev = string.reversed();
    let doms = rev.domains();
    let n = doms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let reach: Vec<Region> = doms.iter().map(|d| d | &d.outer_layer(lattice)).collect();
    for i in 0..n {
        for j in i + 1..n {
            if doms[i].intersects(&reach[j]) || doms[j].intersects(&reach[i]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let a_marker = partition.marker(lattice, Marker::A)?;
    let c_marker = partition.marker(lattice, Marker::C)?;
    let mut touches_a = vec![false; n];
    let mut touches_c = vec![false; n];
    for (i, d) in doms.iter().enumerate() {
        let root = find(&mut parent, i);
        touches_a[root] |= d.intersects(&a_marker);
        touches_c[root] |= d.intersects(&c_marker);
    }
    Ok((0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            match (touches_a[root], touches_c[root]) {
                (true, false) => Side::A,
                (true, true) if doms[i].intersects(&a_marker) => Side::A,
                _ => Side::C,
            }
        })
        .collect())
}

/// Pairs every `(AB_a, BC_b)` term product with the `(B_e, ABC_z)` product
/// sharing its branch history and checks that coefficients match, crossing
/// lengths cancel, and purity exponents differ by the topological `-2`.
pub fn check_term_pairing(
    lattice: &Lattice,
    oracle: &GroupOracle,
    partition: &Partition,
    string: &DomainString,
    term_cap: usize,
) -> Result<PairingReport> {
    check_partition(lattice, partition)?;
    let sides = step_sides(lattice, partition, string)?;
    let tracked: Vec<Vec<TrackedTerm>> = Composite::ALL
        .iter()
        .map(|&c| evolve_tracked(lattice.dim(), partition.composite(c), string, term_cap))
        .collect::<Result<_>>()?;
    let index = |terms: &[TrackedTerm]| -> HashMap<Vec<Branch>, usize> {
        terms.iter().enumerate().map(|(i, t)| (t.path.clone(), i)).collect()
    };
    let (ab, bc, b, abc) = (&tracked[0], &tracked[1], &tracked[2], &tracked[3]);
    let b_index = index(b);
    let abc_index = index(abc);

    let crossing = |r: &Region| -> Result<i64> {
        if r.is_empty() || r.is_full() {
            return Ok(0);
        }
        Ok(boundary_stats(lattice, r)?.crossing_count() as i64)
    };
    let mut report = PairingReport::default();
    let mut hit = vec![false; b.len() * abc.len()];
    for ta in ab {
        for tc in bc {
            report.quadruples += 1;
            let mut eta = Vec::with_capacity(sides.len());
            let mut zeta = Vec::with_capacity(sides.len());
            for (k, side) in sides.iter().enumerate() {
                match side {
                    Side::A => {
                        zeta.push(ta.path[k]);
                        eta.push(tc.path[k]);
                    }
                    Side::C => {
                        eta.push(ta.path[k]);
                        zeta.push(tc.path[k]);
                    }
                }
            }
            let (Some(&ie), Some(&iz)) = (b_index.get(&eta), abc_index.get(&zeta)) else {
                report.unmatched += 1;
                report.fail(|| format!("no partner for branch histories {:?} / {:?}", ta.path, tc.path));
                continue;
            };
            hit[ie * abc.len() + iz] = true;
            let (tb, tz) = (&b[ie], &abc[iz]);
            if &ta.coefficient * &tc.coefficient != &tb.coefficient * &tz.coefficient {
                report.coefficient_mismatches += 1;
                report.fail(|| format!("coefficient products differ for {:?} / {:?}", ta.path, tc.path));
            }
            let lhs = crossing(&ta.region)? + crossing(&tc.region)?;
            let rhs = crossing(&tb.region)? + crossing(&tz.region)?;
            if lhs != rhs {
                report.length_mismatches += 1;
                report.fail(|| format!("crossing lengths {lhs} vs {rhs} for {:?} / {:?}", ta.path, tc.path));
            }
            let ex = oracle.exponent(&ta.region)? + oracle.exponent(&tc.region)?
                - oracle.exponent(&tb.region)?
                - oracle.exponent(&tz.region)?;
            if ex != -2 {
                report.exponent_mismatches += 1;
                report.fail(|| format!("purity exponents differ by {ex} for {:?} / {:?}", ta.path, tc.path));
            }
        }
    }
    let missed = hit.iter().filter(|&&h| !h).count();
    if missed > 0 {
        report.unmatched += missed;
        report.fail(|| format!("{missed} denominator products left unpaired"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{make_arch, make_bridge, make_cut};
    use crate::group_purity::ConstantOracle;
    use crate::lattice::LatticeConfig;
    use crate::partition::{simply_connected_partition, standard_partition, PartitionGeometry};
    use crate::swap_dynamics::DEFAULT_TERM_CAP;

    fn geom() -> PartitionGeometry {
        PartitionGeometry {
            row: 2,
            col: 2,
            size: 8,
            thickness: 2,
        }
    }

    fn setup(d: u32) -> (Lattice, Partition, GroupOracle) {
        let lat = Lattice::new(LatticeConfig::new(12, d)).unwrap();
        let p = standard_partition(&lat, geom()).unwrap();
        let o = GroupOracle::new(&lat).unwrap();
        (lat, p, o)
    }

    #[test]
    fn ground_state_ratio_is_inverse_d_squared() {
        for d in [2, 3] {
            let (lat, p, o) = setup(d);
            let r = topological_purity(&lat, &o, &p).unwrap();
            assert_eq!(r.ratio, pow_rational(d, -2));
            assert_eq!(r.phase, Phase::Topological);
            assert!(r.is_consistent());
            assert!((r.renyi_combination() - 2.0 * r.gamma_expected()).abs() < 1e-12);
        }
    }

    #[test]
    fn simply_connected_and_trivial_ratios_are_one() {
        let (lat, p, o) = setup(2);
        let sc = simply_connected_partition(&lat, 3, 1, 4, [3, 3, 3]).unwrap();
        assert!(topological_purity(&lat, &o, &sc).unwrap().ratio.is_one());
        assert!(topological_purity(&lat, &ConstantOracle, &p).unwrap().ratio.is_one());
    }

    #[test]
    fn empty_string_matches_static_ratio() {
        let (lat, p, o) = setup(2);
        let a = topological_purity(&lat, &o, &p).unwrap();
        let b = evolved_topological_purity(&lat, &o, &p, &DomainString::empty(), DEFAULT_TERM_CAP).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_domain_at_b_c_junction_keeps_ratio() {
        let (lat, p, o) = setup(2);
        // plaquette in the hole at the lower-left corner: reaches B_left and C
        let x = Region::plaquette(&lat, 7, 4);
        let s = DomainString::new(vec![x]).unwrap();
        let r = evolved_topological_purity(&lat, &o, &p, &s, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(r.ratio, pow_rational(2, -2));
        assert!(r.entries.iter().any(|e| e.terms > 1));
    }

    #[test]
    fn arch_keeps_ratio() {
        let (lat, p, o) = setup(2);
        let s = make_arch(&lat, geom()).unwrap();
        let r = evolved_topological_purity(&lat, &o, &p, &s, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(r.ratio, pow_rational(2, -2), "{r}");
    }

    #[test]
    fn pairing_holds_for_arch() {
        let (lat, p, o) = setup(2);
        let s = make_arch(&lat, geom()).unwrap();
        let rep = check_term_pairing(&lat, &o, &p, &s, DEFAULT_TERM_CAP).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn bump_on_outer_rim_is_harmless() {
        let (lat, p, o) = setup(2);
        let bump = Region::plaquette(&lat, 1, 5);
        let out = deform_boundary(&lat, &o, &p, &bump).unwrap();
        assert!(out.unchanged());
        assert_eq!(out.host, Marker::A);
        assert!(deformation_keeps_ratio(&lat, &o, &p, &Region::empty(lat.num_edges())).unwrap());
    }

    #[test]
    fn topology_changing_deformation_is_refused() {
        let (lat, p, o) = setup(2);
        let fill = Region::rectangle(&lat, 4, 4, 4, 4);
        assert!(matches!(
            deform_boundary(&lat, &o, &p, &fill),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn broken_constructions_shift_the_ratio() {
        let lat24 = Lattice::new(LatticeConfig::new(24, 2)).unwrap();
        let g24 = PartitionGeometry {
            row: 2,
            col: 2,
            size: 18,
            thickness: 6,
        };
        let p24 = standard_partition(&lat24, g24).unwrap();
        let o24 = GroupOracle::new(&lat24).unwrap();
        let cut = make_cut(&lat24, g24).unwrap();
        let r = evolved_topological_purity(&lat24, &o24, &p24, &cut, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(r.ratio, BigRational::new(40910447059u64.into(), 163641786188u64.into()));
        let t = evolved_topological_purity(&lat24, &ConstantOracle, &p24, &cut, DEFAULT_TERM_CAP).unwrap();
        assert!(t.ratio.is_one());
        let (traj, _) = extremal_trajectory_ratio(&lat24, &o24, &p24, &cut, Branch::Drop, DEFAULT_TERM_CAP).unwrap();
        assert!(traj.is_one());

        let (lat, p, o) = setup(2);
        let bridge = make_bridge(&lat, geom()).unwrap();
        let r = evolved_topological_purity(&lat, &o, &p, &bridge, DEFAULT_TERM_CAP).unwrap();
        assert_eq!(r.ratio, BigRational::new(14170489.into(), 56748516.into()));
    }
}
