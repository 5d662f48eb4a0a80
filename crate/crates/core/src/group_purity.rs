//! Exact ground-state purities from the star group.
//!
//! The ground state is the uniform superposition over the orbit of
//! `|0...0>` under the abelian group `G` generated by the star shifts. For a
//! cut `(L, L')` the purity is `|G_L| |G_L'| / |G|`, where `G_L` is the
//! subgroup acting trivially outside `L`. Writing `M` for the star exponent
//! matrix, `G_L` is the kernel of restricting `G` to the bonds of `L'`, so
//! `|G_L| = |span M| / |span M|_L'|` and only span orders are ever needed.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::modular::{factorize, span_order};
use crate::region::{boundary_stats, Region};

/// Exponent vectors of the star generators `A_1(v)`, one row per vertex.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    dim: u32,
    num_edges: usize,
    rows: Vec<Vec<u64>>,
}

impl GeneratorMatrix {
    pub fn stars(lattice: &Lattice) -> Self {
        let d = lattice.dim() as u64;
        let rows = lattice
            .stars()
            .iter()
            .map(|s| {
                let mut row = vec![0u64; lattice.num_edges()];
                for (e, sign) in s.edges.iter().zip(s.signs) {
                    row[e.0] = (row[e.0] + if sign > 0 { 1 } else { d - 1 }) % d;
                }
                row
            })
            .collect();
        GeneratorMatrix {
            dim: lattice.dim(),
            num_edges: lattice.num_edges(),
            rows,
        }
    }

    /// No generators: the stabiliser group of a product basis state.
    pub fn trivial(lattice: &Lattice) -> Self {
        GeneratorMatrix {
            dim: lattice.dim(),
            num_edges: lattice.num_edges(),
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    fn restricted(&self, region: &Region) -> Vec<Vec<u64>> {
        let cols: Vec<usize> = region.iter().map(|e| e.0).collect();
        self.rows
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect()
    }

    /// `log_d` of the span order of the columns in `region`.
    fn span_exponent(&self, region: &Region) -> Result<u32> {
        if self.rows.is_empty() || region.is_empty() {
            return Ok(0);
        }
        to_power_of_d(&span_order(&self.restricted(region), self.dim as u64), self.dim)
    }

    fn check(&self, region: &Region) -> Result<()> {
        if region.universe() != self.num_edges {
            return Err(Error::LatticeMismatch {
                expected: self.num_edges,
                found: region.universe(),
            });
        }
        Ok(())
    }
}

fn to_power_of_d(order: &[(u64, u32)], d: u32) -> Result<u32> {
    let mut exp: Option<u32> = None;
    for (&(p, e), (q, k)) in order.iter().zip(factorize(d as u64)) {
        debug_assert_eq!(p, q);
        if e % k != 0 || exp.is_some_and(|x| x != e / k) {
            return Err(Error::Assertion(format!("group order {order:?} is not a power of {d}")));
        }
        exp = Some(e / k);
    }
    Ok(exp.unwrap_or(0))
}

/// `r` with `|G| = d^r`.
pub fn group_order(matrix: &GeneratorMatrix) -> Result<u32> {
    matrix.span_exponent(&Region::full(matrix.num_edges))
}

/// `r_L` with `|G_L| = d^(r_L)`.
pub fn subgroup_order_supported_in(matrix: &GeneratorMatrix, region: &Region) -> Result<u32> {
    matrix.check(region)?;
    let total = group_order(matrix)?;
    let outside = matrix.span_exponent(&region.complement())?;
    Ok(total - outside)
}

/// An exact purity `d^exponent` with its floating view.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityValue {
    pub exact: BigRational,
    pub log2: f64,
    /// `log_d` of the purity.
    pub exponent: i64,
}

impl PurityValue {
    pub fn from_exponent(d: u32, exponent: i64) -> Self {
        PurityValue {
            exact: pow_rational(d, exponent),
            log2: exponent as f64 * (d as f64).log2(),
            exponent,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.log2.exp2()
    }
}

/// `d^k` as an exact rational.
pub fn pow_rational(d: u32, k: i64) -> BigRational {
    let base = BigInt::from(d).pow(k.unsigned_abs() as u32);
    if k >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// Exponent `k` with `x = d^k`, if `x` is an integral power of `d`.
pub fn log_exact(x: &BigRational, d: u32) -> Option<i64> {
    if !x.is_positive() {
        return None;
    }
    let (mut num, mut den) = (x.numer().clone(), x.denom().clone());
    let d = BigInt::from(d);
    let mut k = 0i64;
    while (&num % &d) == BigInt::from(0) {
        num /= &d;
        k += 1;
    }
    while (&den % &d) == BigInt::from(0) {
        den /= &d;
        k -= 1;
    }
    (num.is_one() && den.is_one()).then_some(k)
}

/// Group-theoretic purity, with `(r_L, r_L', r)`.
pub fn purity_group(matrix: &GeneratorMatrix, region: &Region) -> Result<(PurityValue, (u32, u32, u32))> {
    matrix.check(region)?;
    if region.is_empty() || region.is_full() {
        return Err(Error::DegenerateRegion);
    }
    let r = group_order(matrix)?;
    let inside = r - matrix.span_exponent(&region.complement())?;
    let outside = r - matrix.span_exponent(region)?;
    let exponent = inside as i64 + outside as i64 - r as i64;
    Ok((PurityValue::from_exponent(matrix.dim, exponent), (inside, outside, r)))
}

/// Purity from the boundary law: `d^(-|dL| + shape + n_d)`, i.e. one factor
/// `1/d` per crossing star and one factor `d` per boundary component.
pub fn purity_geometric(lattice: &Lattice, region: &Region) -> Result<PurityValue> {
    let stats = boundary_stats(lattice, region)?;
    Ok(PurityValue::from_exponent(lattice.dim(), stats.purity_exponent()))
}

/// Source of exact subsystem purities for the Heisenberg-picture evaluator.
pub trait PurityOracle: Sync {
    fn purity(&self, region: &Region) -> Result<BigRational>;

    fn name(&self) -> &'static str;
}

/// Purity 1 on every cut: any pure product state.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantOracle;

impl PurityOracle for ConstantOracle {
    fn purity(&self, _region: &Region) -> Result<BigRational> {
        Ok(BigRational::one())
    }

    fn name(&self) -> &'static str {
        "constant1"
    }
}

/// Ground-state purities via span orders, memoised per region. Empty and
/// full regions give 1.
#[derive(Debug)]
pub struct GroupOracle {
    matrix: GeneratorMatrix,
    total: u32,
    cache: RwLock<HashMap<Region, i64>>,
}

impl GroupOracle {
    pub fn new(lattice: &Lattice) -> Result<Self> {
        Self::from_matrix(GeneratorMatrix::stars(lattice))
    }

    pub fn from_matrix(matrix: GeneratorMatrix) -> Result<Self> {
        let total = group_order(&matrix)?;
        Ok(GroupOracle {
            matrix,
            total,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> u32 {
        self.matrix.dim
    }

    /// `log_d` of the purity.
    pub fn exponent(&self, region: &Region) -> Result<i64> {
        self.matrix.check(region)?;
        if region.is_empty() || region.is_full() {
            return Ok(0);
        }
        if let Some(&k) = self.cache.read().get(region) {
            return Ok(k);
        }
        let r = self.total as i64;
        let k = r - self.matrix.span_exponent(&region.complement())? as i64 - self.matrix.span_exponent(region)? as i64;
        self.cache.write().insert(region.clone(), k);
        Ok(k)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().len()
    }
}

impl PurityOracle for GroupOracle {
    fn purity(&self, region: &Region) -> Result<BigRational> {
        Ok(pow_rational(self.matrix.dim, self.exponent(region)?))
    }

    fn name(&self) -> &'static str {
        "group"
    }
}

/// Closed-form boundary-law purities. Empty and full regions give 1.
#[derive(Debug, Clone)]
pub struct GeometricOracle<'a> {
    lattice: &'a Lattice,
}

impl<'a> GeometricOracle<'a> {
    pub fn new(lattice: &'a Lattice) -> Self {
        GeometricOracle { lattice }
    }
}

impl PurityOracle for GeometricOracle<'_> {
    fn purity(&self, region: &Region) -> Result<BigRational> {
        if region.is_empty() || region.is_full() {
            return Ok(BigRational::one());
        }
        Ok(purity_geometric(self.lattice, region)?.exact)
    }

    fn name(&self) -> &'static str {
        "geometric"
    }
}

/// Floating view of an exact rational.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator or denominator outside f64 range: go through logs
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        if n.is_finite() && d.is_finite() {
            n / d
        } else {
            let ln = |b: &BigInt| {
                let bits = b.bits();
                let shift = bits.saturating_sub(52);
                (b >> shift).to_f64().unwrap_or(1.0).ln() + shift as f64 * std::f64::consts::LN_2
            };
            (ln(x.numer()) - ln(x.denom())).exp()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeConfig, VertexId};
    use crate::region::{graph_components, star_closure};
    use std::collections::HashSet;

    fn lat(l: usize, d: u32) -> Lattice {
        Lattice::new(LatticeConfig::new(l, d)).unwrap()
    }

    /// `|G_L||G_L'|/|G| = d^(c(L) + c(L') - N_v - 1)` with `c` counting graph
    /// components; an independent route through union-find.
    fn component_exponent(lat: &Lattice, r: &Region) -> i64 {
        graph_components(lat, r) as i64 + graph_components(lat, &r.complement()) as i64 - lat.num_vertices() as i64 - 1
    }

    #[test]
    fn torus_group_rank() {
        assert_eq!(group_order(&GeneratorMatrix::stars(&lat(2, 2))).unwrap(), 3);
        assert_eq!(group_order(&GeneratorMatrix::stars(&lat(4, 3))).unwrap(), 15);
        assert_eq!(group_order(&GeneratorMatrix::stars(&lat(3, 4))).unwrap(), 8);
        assert_eq!(group_order(&GeneratorMatrix::trivial(&lat(3, 4))).unwrap(), 0);
    }

    #[test]
    fn composite_dimension_group_order_by_enumeration() {
        let lat = lat(3, 4);
        let m = GeneratorMatrix::stars(&lat);
        let mut images = HashSet::new();
        let mut inside_a = HashSet::new();
        let region = Region::rectangle(&lat, 0, 0, 1, 2);
        for code in 0..4u64.pow(9) {
            let mut c = code;
            let mut acc = vec![0u64; lat.num_edges()];
            for row in m.rows() {
                let coef = c % 4;
                c /= 4;
                for (a, &x) in acc.iter_mut().zip(row) {
                    *a = (*a + coef * x) % 4;
                }
            }
            if acc
                .iter()
                .enumerate()
                .all(|(e, &x)| x == 0 || region.contains(crate::lattice::EdgeId(e)))
            {
                inside_a.insert(acc.clone());
            }
            images.insert(acc);
        }
        assert_eq!(images.len(), 4usize.pow(group_order(&m).unwrap()));
        assert_eq!(
            inside_a.len(),
            4usize.pow(subgroup_order_supported_in(&m, &region).unwrap())
        );
    }

    #[test]
    fn supported_subgroup_extremes() {
        let lat = lat(4, 3);
        let m = GeneratorMatrix::stars(&lat);
        let full = Region::full(lat.num_edges());
        assert_eq!(subgroup_order_supported_in(&m, &full).unwrap(), 15);
        assert_eq!(
            subgroup_order_supported_in(&m, &Region::empty(lat.num_edges())).unwrap(),
            0
        );
    }

    #[test]
    fn block_on_l6_matches_component_count() {
        let lat = lat(6, 2);
        let m = GeneratorMatrix::stars(&lat);
        let block = Region::rectangle(&lat, 1, 1, 3, 3);
        let (p, (ri, ro, r)) = purity_group(&m, &block).unwrap();
        assert_eq!(p.exponent, component_exponent(&lat, &block));
        // the 4 interior vertices of the block generate G_L
        assert_eq!(ri, 4);
        assert_eq!(r, 35);
        assert_eq!(ro as i64, p.exponent + r as i64 - ri as i64);
    }

    #[test]
    fn trivial_generators_give_unit_purity() {
        let lat = lat(4, 2);
        let m = GeneratorMatrix::trivial(&lat);
        let (p, _) = purity_group(&m, &Region::rectangle(&lat, 0, 0, 1, 1)).unwrap();
        assert_eq!(p.exact, BigRational::one());
    }

    #[test]
    fn rectangle_with_twelve_crossing_stars() {
        let lat = lat(8, 2);
        let rect = Region::rectangle(&lat, 1, 1, 3, 3);
        let stats = boundary_stats(&lat, &rect).unwrap();
        assert_eq!(stats.crossing_count(), 12);
        assert_eq!(stats.n_components(), 1);
        let g = purity_geometric(&lat, &rect).unwrap();
        assert_eq!(g.exact, pow_rational(2, -11));
        let (p, _) = purity_group(&GeneratorMatrix::stars(&lat), &rect).unwrap();
        assert_eq!(p.exact, g.exact);
    }

    #[test]
    fn complement_symmetry_random_regions() {
        use rand::{Rng, SeedableRng};
        let lat = lat(6, 2);
        let oracle = GroupOracle::new(&lat).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut r = Region::empty(lat.num_edges());
            for e in 0..lat.num_edges() {
                if rng.random_bool(0.3) {
                    r.insert(crate::lattice::EdgeId(e));
                }
            }
            if r.is_empty() || r.is_full() {
                continue;
            }
            let a = oracle.exponent(&r).unwrap();
            assert_eq!(a, oracle.exponent(&r.complement()).unwrap());
            assert_eq!(a, component_exponent(&lat, &r));
            let smaller = r.count().min(lat.num_edges() - r.count()) as i64;
            assert!(a <= 0 && a >= -smaller);
        }
    }

    #[test]
    fn annulus_boundary_law() {
        let lat = lat(12, 2);
        let ring = Region::annulus(&lat, 2, 2, 8, 2);
        let g = purity_geometric(&lat, &ring).unwrap();
        assert_eq!(g.exponent, -44 + 2);
        let (p, _) = purity_group(&GeneratorMatrix::stars(&lat), &ring).unwrap();
        assert_eq!(p.exponent, g.exponent);
    }

    #[test]
    fn log_exact_round_trip() {
        for k in -20..20 {
            assert_eq!(log_exact(&pow_rational(3, k), 3), Some(k));
        }
        assert_eq!(log_exact(&BigRational::new(2.into(), 3.into()), 3), None);
    }

    #[test]
    fn star_region_purity() {
        let lat = lat(5, 3);
        let r = star_closure(&lat, &[VertexId(7)]);
        let (p, _) = purity_group(&GeneratorMatrix::stars(&lat), &r).unwrap();
        assert_eq!(p.exponent, component_exponent(&lat, &r));
        assert!((p.log2 - p.exponent as f64 * 3f64.log2()).abs() < 1e-12);
    }
}
