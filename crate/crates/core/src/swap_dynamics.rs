//! Heisenberg-picture evolution of swap operators under Haar twirls.
//!
//! Twirling the swap `T_L` over a domain `X` gives
//! `n_drop T_{L\X} + n_add T_{L u X}` with
//! `n_drop = (dX^2 - dI^2) / (dI (dX^2 - 1))` and
//! `n_add = dX (dI^2 - 1) / (dI (dX^2 - 1))`, where `dX = d^|X|` and
//! `dI = d^|L n X|`. The split is applied unconditionally: when `X` lies
//! inside `L` or misses it the formula degenerates to the identity.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::circuits::DomainString;
use crate::error::{Error, Result};
use crate::group_purity::PurityOracle;
use crate::lattice::Lattice;
use crate::region::Region;

pub const DEFAULT_TERM_CAP: usize = 1 << 18;

const PARALLEL_THRESHOLD: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwirlCoefficients {
    pub n_drop: BigRational,
    pub n_add: BigRational,
    pub d_domain: BigInt,
    pub d_overlap: BigInt,
}

impl TwirlCoefficients {
    /// Coefficients for a domain of `domain_len` bonds sharing `overlap` bonds
    /// with the swap region, on qudits of dimension `dim`.
    pub fn new(dim: u32, domain_len: usize, overlap: usize) -> Self {
        assert!(overlap <= domain_len && domain_len > 0);
        let d = BigInt::from(dim);
        let dx = d.pow(domain_len as u32);
        let di = d.pow(overlap as u32);
        let dx2 = &dx * &dx;
        let di2 = &di * &di;
        let den: BigInt = &di * (&dx2 - 1u32);
        TwirlCoefficients {
            n_drop: BigRational::new(&dx2 - &di2, den.clone()),
            n_add: BigRational::new(&dx * (&di2 - 1u32), den),
            d_domain: dx,
            d_overlap: di,
        }
    }
}

/// Whether a twirl on `domain` acts nontrivially on `T_region`: the domain
/// straddles the region, or reaches a bond adjacent to it.
pub fn boundary_hit(lattice: &Lattice, domain: &Region, region: &Region) -> Result<bool> {
    same_universe(domain, region)?;
    if domain.is_empty() {
        return Ok(false);
    }
    let straddles = domain.intersects(region) && !domain.is_subset(region);
    Ok(straddles || domain.intersects(&region.outer_layer(lattice)))
}

fn same_universe(a: &Region, b: &Region) -> Result<()> {
    if a.universe() != b.universe() {
        return Err(Error::LatticeMismatch {
            expected: a.universe(),
            found: b.universe(),
        });
    }
    Ok(())
}

/// A nonnegative rational combination of swap operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapCombo {
    dim: u32,
    universe: usize,
    terms: BTreeMap<Region, BigRational>,
}

impl SwapCombo {
    pub fn empty(lattice: &Lattice) -> Self {
        SwapCombo {
            dim: lattice.dim(),
            universe: lattice.num_edges(),
            terms: BTreeMap::new(),
        }
    }

    /// `T_region` with coefficient 1.
    pub fn swap(lattice: &Lattice, region: &Region) -> Result<Self> {
        let mut c = SwapCombo::empty(lattice);
        c.add_term(region.clone(), BigRational::one())?;
        Ok(c)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Region, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, region: &Region) -> BigRational {
        self.terms.get(region).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coefficient_sum(&self) -> BigRational {
        self.terms.values().fold(BigRational::zero(), |acc, m| acc + m)
    }

    /// Adds `m T_region`, merging with an existing term.
    pub fn add_term(&mut self, region: Region, m: BigRational) -> Result<()> {
        if region.universe() != self.universe {
            return Err(Error::LatticeMismatch {
                expected: self.universe,
                found: region.universe(),
            });
        }
        merge(&mut self.terms, region, m);
        Ok(())
    }
}

fn merge(terms: &mut BTreeMap<Region, BigRational>, region: Region, m: BigRational) {
    if m.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match terms.entry(region) {
        Entry::Vacant(v) => {
            v.insert(m);
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += m;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

fn split(dim: u32, region: &Region, m: &BigRational, domain: &Region) -> [(Region, BigRational); 2] {
    let k = TwirlCoefficients::new(dim, domain.count(), region.intersection_count(domain));
    [(region - domain, m * &k.n_drop), (region | domain, m * &k.n_add)]
}

/// `R_X` applied to every term.
pub fn apply_twirl(combo: &SwapCombo, domain: &Region) -> Result<SwapCombo> {
    if domain.universe() != combo.universe {
        return Err(Error::LatticeMismatch {
            expected: combo.universe,
            found: domain.universe(),
        });
    }
    if domain.is_empty() {
        return Err(Error::Precondition("twirl domain is empty".into()));
    }
    let pieces: Vec<[(Region, BigRational); 2]> = if combo.len() >= PARALLEL_THRESHOLD {
        combo
            .terms
            .par_iter()
            .map(|(r, m)| split(combo.dim, r, m, domain))
            .collect()
    } else {
        combo
            .terms
            .iter()
            .map(|(r, m)| split(combo.dim, r, m, domain))
            .collect()
    };
    let mut terms = BTreeMap::new();
    for (r, m) in pieces.into_iter().flatten() {
        merge(&mut terms, r, m);
    }
    Ok(SwapCombo {
        dim: combo.dim,
        universe: combo.universe,
        terms,
    })
}

/// `R_X` in the two-case form: terms whose region is not hit pass through
/// untouched, the rest split.
pub fn apply_twirl_gated(lattice: &Lattice, combo: &SwapCombo, domain: &Region) -> Result<SwapCombo> {
    let mut out = SwapCombo::empty(lattice);
    for (r, m) in combo.terms() {
        if boundary_hit(lattice, domain, r)? {
            for (r2, m2) in split(combo.dim, r, m, domain) {
                out.add_term(r2, m2)?;
            }
        } else {
            out.add_term(r.clone(), m.clone())?;
        }
    }
    Ok(out)
}

/// Evolves `combo` under the reversed string, i.e. twirls the domains from
/// last to first. Fails once a step produces more than `term_cap` terms.
pub fn apply_string(combo: &SwapCombo, string: &DomainString, term_cap: usize) -> Result<SwapCombo> {
    let mut cur = combo.clone();
    for (step, domain) in string.reversed().domains().iter().enumerate() {
        cur = apply_twirl(&cur, domain)?;
        if cur.len() > term_cap {
            return Err(Error::Budget(format!(
                "combo reached {} terms at step {} of {} (cap {term_cap})",
                cur.len(),
                step + 1,
                string.len()
            )));
        }
    }
    Ok(cur)
}

/// `sum_a m_a P(region_a)`.
pub fn evaluate(combo: &SwapCombo, oracle: &dyn PurityOracle) -> Result<BigRational> {
    let eval = |(r, m): (&Region, &BigRational)| -> Result<BigRational> {
        let p = oracle.purity(r).map_err(|e| Error::Oracle {
            region: format!("{r:?}"),
            source: Box::new(e),
        })?;
        Ok(m * p)
    };
    if combo.len() >= PARALLEL_THRESHOLD {
        combo
            .terms
            .par_iter()
            .map(eval)
            .try_reduce(BigRational::zero, |a, b| Ok(a + b))
    } else {
        combo.terms().try_fold(BigRational::zero(), |acc, t| Ok(acc + eval(t)?))
    }
}

/// Which side of a split a term took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `L \ X`, also recorded when `X` misses `L`.
    Drop,
    /// `L u X`, also recorded when `X` lies inside `L`.
    Add,
}

/// A term labelled by its branch history, one entry per twirl applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedTerm {
    pub region: Region,
    pub coefficient: BigRational,
    pub path: Vec<Branch>,
}

/// Unmerged evolution of `T_region` under the reversed string, keeping the
/// branch history of each term. Zero-weight branches are pruned.
pub fn evolve_tracked(dim: u32, region: &Region, string: &DomainString, term_cap: usize) -> Result<Vec<TrackedTerm>> {
    let mut cur = vec![TrackedTerm {
        region: region.clone(),
        coefficient: BigRational::one(),
        path: Vec::new(),
    }];
    for (step, domain) in string.reversed().domains().iter().enumerate() {
        same_universe(region, domain)?;
        let mut next = Vec::with_capacity(cur.len() * 2);
        for t in cur {
            for ((r, m), b) in split(dim, &t.region, &t.coefficient, domain)
                .into_iter()
                .zip([Branch::Drop, Branch::Add])
            {
                if m.is_zero() {
                    continue;
                }
                let mut path = t.path.clone();
                path.push(b);
                next.push(TrackedTerm {
                    region: r,
                    coefficient: m,
                    path,
                });
            }
        }
        if next.len() > term_cap {
            return Err(Error::Budget(format!(
                "tracked evolution reached {} terms at step {}",
                next.len(),
                step + 1
            )));
        }
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_purity::{ConstantOracle, GroupOracle};
    use crate::lattice::{EdgeId, LatticeConfig};
    use rand::{Rng, SeedableRng};

    fn lat(l: usize, d: u32) -> Lattice {
        Lattice::new(LatticeConfig::new(l, d)).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn edges(lat: &Lattice, ids: &[usize]) -> Region {
        Region::from_edges(lat.num_edges(), ids.iter().map(|&e| EdgeId(e))).unwrap()
    }

    #[test]
    fn half_in_two_qubit_coefficients() {
        let k = TwirlCoefficients::new(2, 2, 1);
        assert_eq!(k.n_drop, q(2, 5));
        assert_eq!(k.n_add, q(2, 5));
    }

    #[test]
    fn degenerate_coefficients() {
        for d in [2, 3, 5] {
            for n in 1..5 {
                let inside = TwirlCoefficients::new(d, n, n);
                assert!(inside.n_drop.is_zero());
                assert!(inside.n_add.is_one());
                let outside = TwirlCoefficients::new(d, n, 0);
                assert!(outside.n_drop.is_one());
                assert!(outside.n_add.is_zero());
                for i in 1..n {
                    let k = TwirlCoefficients::new(d, n, i);
                    assert!(k.n_drop > BigRational::zero() && k.n_add > BigRational::zero());
                }
            }
        }
    }

    #[test]
    fn boundary_hit_cases() {
        let lat = lat(8, 2);
        let big = Region::rectangle(&lat, 1, 1, 5, 5);
        assert!(!boundary_hit(&lat, &Region::plaquette(&lat, 3, 3), &big).unwrap());
        assert!(boundary_hit(&lat, &Region::rectangle(&lat, 0, 2, 2, 1), &big).unwrap());
        assert!(!boundary_hit(&lat, &Region::empty(lat.num_edges()), &big).unwrap());
        // outside the region but on an adjacent bond
        let touching = &Region::plaquette(&lat, 0, 3) - &big;
        assert!(boundary_hit(&lat, &touching, &big).unwrap());
        assert!(!boundary_hit(&lat, &Region::plaquette(&lat, 7, 7), &big).unwrap());
    }

    #[test]
    fn inside_and_outside_domains_are_identity() {
        let lat = lat(8, 3);
        let big = Region::rectangle(&lat, 1, 1, 5, 5);
        let c = SwapCombo::swap(&lat, &big).unwrap();
        assert_eq!(apply_twirl(&c, &Region::plaquette(&lat, 3, 3)).unwrap(), c);
        assert_eq!(apply_twirl(&c, &Region::plaquette(&lat, 7, 7)).unwrap(), c);
    }

    #[test]
    fn gated_and_algebraic_forms_agree() {
        let lat = lat(4, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let random_region = |rng: &mut rand_chacha::ChaCha8Rng, p: f64| {
            let mut r = Region::empty(lat.num_edges());
            for e in 0..lat.num_edges() {
                if rng.random_bool(p) {
                    r.insert(EdgeId(e));
                }
            }
            r
        };
        let mut n = 0;
        while n < 200 {
            let x = random_region(&mut rng, 0.15);
            let l = random_region(&mut rng, 0.5);
            if x.is_empty() {
                continue;
            }
            let c = SwapCombo::swap(&lat, &l).unwrap();
            assert_eq!(apply_twirl(&c, &x).unwrap(), apply_twirl_gated(&lat, &c, &x).unwrap());
            n += 1;
        }
    }

    #[test]
    fn ordering_changes_term_count() {
        let lat = lat(8, 2);
        let region = Region::rectangle(&lat, 2, 2, 4, 4);
        // first domain straddles the left edge; second sits inside, sharing bonds
        let x1 = Region::rectangle(&lat, 3, 1, 1, 2);
        let x2 = &Region::rectangle(&lat, 3, 2, 1, 2) & &region;
        assert!(x1.intersects(&x2) && x2.is_subset(&region));
        let c = SwapCombo::swap(&lat, &region).unwrap();
        // reversal: the last domain of the string acts first
        let s = DomainString::new(vec![x2.clone(), x1.clone()]).unwrap();
        assert_eq!(apply_string(&c, &s, DEFAULT_TERM_CAP).unwrap().len(), 3);
        let s = DomainString::new(vec![x1, x2]).unwrap();
        assert_eq!(apply_string(&c, &s, DEFAULT_TERM_CAP).unwrap().len(), 2);
    }

    #[test]
    fn two_step_expansion_matches_hand_expansion() {
        let lat = lat(6, 2);
        let region = Region::rectangle(&lat, 1, 1, 3, 3);
        let x1 = Region::plaquette(&lat, 1, 0);
        let x2 = Region::plaquette(&lat, 3, 4);
        let c = SwapCombo::swap(&lat, &region).unwrap();
        let s = DomainString::new(vec![x1.clone(), x2.clone()]).unwrap();
        let out = apply_string(&c, &s, DEFAULT_TERM_CAP).unwrap();
        // disjoint far-apart domains: four products of single-domain splits
        let k1 = TwirlCoefficients::new(2, 4, region.intersection_count(&x1));
        let k2 = TwirlCoefficients::new(2, 4, region.intersection_count(&x2));
        let mut expect = SwapCombo::empty(&lat);
        for (a, ma) in [(&region - &x2, &k2.n_drop), (&region | &x2, &k2.n_add)] {
            for (b, mb) in [(&a - &x1, &k1.n_drop), (&a | &x1, &k1.n_add)] {
                expect.add_term(b, ma * mb).unwrap();
            }
        }
        assert_eq!(out, expect);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn empty_string_is_identity_and_cap_trips() {
        let lat = lat(6, 2);
        let region = Region::rectangle(&lat, 1, 1, 3, 3);
        let c = SwapCombo::swap(&lat, &region).unwrap();
        assert_eq!(apply_string(&c, &DomainString::empty(), DEFAULT_TERM_CAP).unwrap(), c);
        let s = DomainString::new(vec![Region::plaquette(&lat, 1, 0), Region::plaquette(&lat, 3, 4)]).unwrap();
        let err = apply_string(&c, &s, 3).unwrap_err();
        assert!(matches!(err, Error::Budget(ref m) if m.contains("step 2")));
    }

    #[test]
    fn merging_preserves_evaluation() {
        let lat = lat(3, 2);
        let oracle = GroupOracle::new(&lat).unwrap();
        let region = Region::rectangle(&lat, 0, 0, 1, 2);
        let s = DomainString::new(vec![
            edges(&lat, &[0, 3, 5]),
            edges(&lat, &[2, 3]),
            edges(&lat, &[0, 2]),
        ])
        .unwrap();
        let merged = apply_string(&SwapCombo::swap(&lat, &region).unwrap(), &s, 1000).unwrap();
        let tracked = evolve_tracked(2, &region, &s, 1000).unwrap();
        let mut unmerged = BigRational::zero();
        for t in &tracked {
            unmerged += &t.coefficient * oracle.purity(&t.region).unwrap();
        }
        assert_eq!(evaluate(&merged, &oracle).unwrap(), unmerged);
        assert!(tracked.len() >= merged.len());
    }

    #[test]
    fn coefficient_sum_is_product_state_value() {
        let lat = lat(4, 2);
        let region = Region::rectangle(&lat, 0, 0, 2, 2);
        let x = edges(&lat, &[0, 1]);
        let c = apply_twirl(&SwapCombo::swap(&lat, &region).unwrap(), &x).unwrap();
        assert_eq!(evaluate(&c, &ConstantOracle).unwrap(), c.coefficient_sum());
        let k = TwirlCoefficients::new(2, 2, region.intersection_count(&x));
        assert_eq!(c.coefficient_sum(), &k.n_drop + &k.n_add);
    }
}
