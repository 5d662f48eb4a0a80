//! Dense state vectors for small tori: exact ground states, reduced
//! purities, and Monte-Carlo averages over Haar-random local unitaries.

use num_complex::Complex64;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::circuits::DomainString;
use crate::error::{Error, Result};
use crate::group_purity::{group_order, GeneratorMatrix, PurityOracle};
use crate::lattice::Lattice;
use crate::region::Region;

/// Largest state vector built, in amplitudes.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 20;

/// Gram-matrix work above which purities are summed in parallel.
const PARALLEL_WORK: usize = 1 << 22;

/// States with fewer than one nonzero amplitude in this many use the sparse
/// purity path.
const SPARSE_FACTOR: usize = 16;

/// Fewest samples accepted by the Monte-Carlo estimators.
pub const MIN_SAMPLES: usize = 100;

/// Amplitudes over `Z_d^N`, site `e` being digit `e` (least significant first).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dim: u32,
    sites: usize,
    amps: Vec<Complex64>,
}

fn checked_size(dim: u32, sites: usize, cap: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..sites {
        n = n
            .checked_mul(dim as usize)
            .filter(|&n| n <= cap)
            .ok_or_else(|| Error::Budget(format!("{dim}^{sites} amplitudes exceed the cap of {cap}")))?;
    }
    Ok(n)
}

impl StateVector {
    /// `|0...0>`.
    pub fn product_zero(lattice: &Lattice, cap: usize) -> Result<Self> {
        let n = checked_size(lattice.dim(), lattice.num_edges(), cap)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            dim: lattice.dim(),
            sites: lattice.num_edges(),
            amps,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Row and column indices of every amplitude for the cut `region | rest`.
    pub fn cut(&self, region: &Region) -> Result<Cut> {
        if region.universe() != self.sites {
            return Err(Error::LatticeMismatch {
                expected: self.sites,
                found: region.universe(),
            });
        }
        let d = self.dim as usize;
        let mut weight_in = vec![0usize; self.sites];
        let mut weight_out = vec![0usize; self.sites];
        let (mut wi, mut wo) = (1usize, 1usize);
        for e in 0..self.sites {
            if region.contains(crate::lattice::EdgeId(e)) {
                weight_in[e] = wi;
                wi *= d;
            } else {
                weight_out[e] = wo;
                wo *= d;
            }
        }
        // keep the Gram matrix on the smaller side
        let swap = wi > wo;
        let (small, large) = if swap { (wo, wi) } else { (wi, wo) };
        let mut slots = Vec::with_capacity(self.amps.len());
        let mut digits = vec![0usize; self.sites];
        let (mut row, mut col) = (0usize, 0usize);
        for _ in 0..self.amps.len() {
            let (i, j) = if swap { (col, row) } else { (row, col) };
            slots.push((i * large + j) as u32);
            // odometer increment
            for e in 0..self.sites {
                digits[e] += 1;
                row += weight_in[e];
                col += weight_out[e];
                if digits[e] < d {
                    break;
                }
                digits[e] = 0;
                row -= d * weight_in[e];
                col -= d * weight_out[e];
            }
        }
        Ok(Cut { small, large, slots })
    }

    /// `tr(rho^2)` across a precomputed cut.
    pub fn purity_across(&self, cut: &Cut) -> f64 {
        let nonzero = self.amps.iter().filter(|a| a.re != 0.0 || a.im != 0.0).count();
        if nonzero * SPARSE_FACTOR < self.amps.len() {
            self.purity_sparse(cut)
        } else {
            self.purity_dense(cut)
        }
    }

    /// Accumulates the Gram matrix one column at a time over nonzero entries.
    fn purity_sparse(&self, cut: &Cut) -> f64 {
        let large = cut.large;
        let mut entries: Vec<(usize, usize, Complex64)> = self
            .amps
            .iter()
            .zip(&cut.slots)
            .filter(|(a, _)| a.re != 0.0 || a.im != 0.0)
            .map(|(a, &slot)| (slot as usize % large, slot as usize / large, *a))
            .collect();
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut rows: Vec<usize> = entries.iter().map(|e| e.1).collect();
        rows.sort_unstable();
        rows.dedup();
        let n = rows.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); n * n];
        for column in entries.chunk_by(|x, y| x.0 == y.0) {
            for (k, &(_, ri, x)) in column.iter().enumerate() {
                let i = rows.binary_search(&ri).unwrap();
                for &(_, rj, y) in &column[k..] {
                    let j = rows.binary_search(&rj).unwrap();
                    gram[i * n + j] += x * y.conj();
                }
            }
        }
        // rows are sorted within a column, so only the upper triangle is filled
        (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let g = gram[i * n + j].norm_sqr();
                if i == j {
                    g
                } else {
                    2.0 * g
                }
            })
            .sum()
    }

    fn purity_dense(&self, cut: &Cut) -> f64 {
        let (small, large) = (cut.small, cut.large);
        let mut m = vec![Complex64::new(0.0, 0.0); small * large];
        for (amp, &slot) in self.amps.iter().zip(&cut.slots) {
            m[slot as usize] = *amp;
        }
        let rows: Vec<&[Complex64]> = m.chunks(large).collect();
        let row_sum = |i: usize| {
            let a = rows[i];
            let mut acc = 0.0;
            for (j, b) in rows.iter().enumerate().skip(i) {
                let g: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
                acc += if j == i { g.norm_sqr() } else { 2.0 * g.norm_sqr() };
            }
            acc
        };
        if small * small * large >= PARALLEL_WORK {
            (0..small).into_par_iter().map(row_sum).sum()
        } else {
            (0..small).map(row_sum).sum()
        }
    }

    /// `tr(rho_region^2)`.
    pub fn reduced_purity(&self, region: &Region) -> Result<f64> {
        Ok(self.purity_across(&self.cut(region)?))
    }

    /// Index plan for unitaries on the sites of `domain`.
    pub fn local_plan(&self, domain: &Region) -> Result<LocalPlan> {
        if domain.universe() != self.sites {
            return Err(Error::LatticeMismatch {
                expected: self.sites,
                found: domain.universe(),
            });
        }
        let sites: Vec<usize> = domain.iter().map(|e| e.0).collect();
        let d = self.dim as usize;
        let k = checked_size(self.dim, sites.len(), usize::MAX)?;
        let strides: Vec<usize> = sites.iter().map(|&s| d.pow(s as u32)).collect();
        let offsets: Vec<usize> = (0..k)
            .map(|mut local| {
                let mut off = 0;
                for &st in &strides {
                    off += (local % d) * st;
                    local /= d;
                }
                off
            })
            .collect();
        let mut in_domain = vec![false; self.sites];
        for &s in &sites {
            in_domain[s] = true;
        }
        let bases: Vec<usize> = (0..self.amps.len())
            .filter(|&idx| {
                let mut x = idx;
                (0..self.sites).all(|e| {
                    let digit = x % d;
                    x /= d;
                    !in_domain[e] || digit == 0
                })
            })
            .collect();
        Ok(LocalPlan { offsets, bases })
    }

    /// Applies a row-major unitary through a plan from [`Self::local_plan`].
    pub fn apply_planned(&mut self, plan: &LocalPlan, u: &[Complex64]) -> Result<()> {
        let k = plan.offsets.len();
        if u.len() != k * k {
            return Err(Error::Precondition(format!(
                "unitary has {} entries, domain needs {k}x{k}",
                u.len()
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for &base in &plan.bases {
            for (b, &off) in buf.iter_mut().zip(&plan.offsets) {
                *b = self.amps[base + off];
            }
            for (i, &off) in plan.offsets.iter().enumerate() {
                let row = &u[i * k..(i + 1) * k];
                self.amps[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    /// Applies a unitary on the sites of `domain` (row-major, site order
    /// ascending, first site least significant).
    pub fn apply_unitary(&mut self, domain: &Region, u: &[Complex64]) -> Result<()> {
        let plan = self.local_plan(domain)?;
        self.apply_planned(&plan, u)
    }

    fn digits(&self, mut index: usize) -> Vec<u32> {
        let d = self.dim as usize;
        (0..self.sites)
            .map(|_| {
                let x = index % d;
                index /= d;
                x as u32
            })
            .collect()
    }
}

/// Amplitude layout for one bipartition.
#[derive(Debug, Clone)]
pub struct Cut {
    small: usize,
    large: usize,
    slots: Vec<u32>,
}

/// Amplitude layout for unitaries on one domain.
#[derive(Debug, Clone)]
pub struct LocalPlan {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalPlan {
    /// Local Hilbert space dimension.
    pub fn dim(&self) -> usize {
        self.offsets.len()
    }
}

/// The uniform superposition over the orbit of `|0...0>` under the star
/// shifts, checked against every star and plaquette.
pub fn build_ground_state(lattice: &Lattice, cap: usize) -> Result<StateVector> {
    let mut state = StateVector::product_zero(lattice, cap)?;
    state.amps[0] = Complex64::new(0.0, 0.0);
    let d = lattice.dim() as u64;
    let nv = lattice.num_vertices();
    let weights: Vec<u64> = (0..lattice.num_edges()).map(|e| d.pow(e as u32)).collect();
    let combos = (d as usize)
        .checked_pow(nv as u32)
        .filter(|&n| n <= cap.saturating_mul(64))
        .ok_or_else(|| Error::Budget(format!("{d}^{nv} star configurations to enumerate")))?;
    let mut seen = 0usize;
    let mut config = vec![0u64; nv];
    for _ in 0..combos {
        let mut x = vec![0u64; lattice.num_edges()];
        for (v, &cv) in config.iter().enumerate() {
            if cv == 0 {
                continue;
            }
            let s = lattice.star(crate::lattice::VertexId(v));
            for (e, sign) in s.edges.iter().zip(s.signs) {
                let shift = if sign > 0 { cv } else { d - cv };
                x[e.0] = (x[e.0] + shift) % d;
            }
        }
        let idx: u64 = x.iter().zip(&weights).map(|(a, w)| a * w).sum();
        let slot = &mut state.amps[idx as usize];
        if slot.re == 0.0 {
            *slot = Complex64::new(1.0, 0.0);
            seen += 1;
        }
        for c in config.iter_mut() {
            *c += 1;
            if *c < d {
                break;
            }
            *c = 0;
        }
    }
    let r = group_order(&GeneratorMatrix::stars(lattice))?;
    if seen as u64 != d.pow(r) {
        return Err(Error::Assertion(format!(
            "ground state orbit has {seen} elements, expected {d}^{r}"
        )));
    }
    let norm = (seen as f64).sqrt().recip();
    for a in state.amps.iter_mut() {
        *a *= norm;
    }
    check_stabilizers(lattice, &state)?;
    Ok(state)
}

fn check_stabilizers(lattice: &Lattice, state: &StateVector) -> Result<()> {
    let d = lattice.dim() as i64;
    for (idx, a) in state.amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let x = state.digits(idx);
        for f in lattice.faces() {
            let flux: i64 = f.edges.iter().zip(f.signs).map(|(e, s)| s as i64 * x[e.0] as i64).sum();
            if flux.rem_euclid(d) != 0 {
                return Err(Error::Assertion(format!(
                    "basis state {idx} carries flux through a plaquette"
                )));
            }
        }
    }
    Ok(())
}

/// Haar-random unitaries by Gram-Schmidt on complex Gaussian matrices.
pub struct HaarSampler {
    rng: ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        HaarSampler { rng }
    }

    /// Row-major `n x n` unitary.
    pub fn sample(&mut self, n: usize) -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m: Vec<Complex64> = (0..n * n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                Complex64::new(re * s, im * s)
            })
            .collect();
        // orthonormalise rows; positive R diagonals make the law Haar
        for i in 0..n {
            for j in 0..i {
                let (done, rest) = m.split_at_mut(i * n);
                let qj = &done[j * n..(j + 1) * n];
                let row = &mut rest[..n];
                let proj: Complex64 = row.iter().zip(qj).map(|(a, b)| a * b.conj()).sum();
                for (a, b) in row.iter_mut().zip(qj) {
                    *a -= proj * b;
                }
            }
            let row = &mut m[i * n..(i + 1) * n];
            let norm = row.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in row.iter_mut() {
                *a /= norm;
            }
        }
        m
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            std_err: (var / n).sqrt(),
            samples: xs.len(),
        }
    }

    /// `|mean - x|` in units of the standard error (with a floor for exact
    /// zero-variance estimates).
    pub fn deviation(&self, x: f64) -> f64 {
        (self.mean - x).abs() / self.std_err.max(1e-12)
    }
}

/// Average purity of `region` after independent Haar unitaries on the
/// domains of `string`, applied in circuit order. Sample `i` draws from
/// stream `i` of `seed`, so results do not depend on the thread count.
pub fn mc_string_expectation(
    state: &StateVector,
    string: &DomainString,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "at least {MIN_SAMPLES} samples required, got {samples}"
        )));
    }
    for x in string.domains() {
        checked_size(state.dim, x.count(), 4096)?;
    }
    let plans: Vec<LocalPlan> = string
        .domains()
        .iter()
        .map(|x| state.local_plan(x))
        .collect::<Result<_>>()?;
    let cut = state.cut(region)?;
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut sampler = HaarSampler::new(seed, i as u64);
            let mut psi = state.clone();
            for plan in &plans {
                psi.apply_planned(plan, &sampler.sample(plan.dim()))?;
            }
            Ok(psi.purity_across(&cut))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&values))
}

/// Average purity of `region` after one Haar unitary on `domain`.
pub fn mc_twirl_expectation(
    state: &StateVector,
    domain: &Region,
    region: &Region,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let s = DomainString::new(vec![domain.clone()])?;
    mc_string_expectation(state, &s, region, samples, seed)
}

/// Purities read off a dense state, as floating values converted to
/// rationals.
pub struct StatevectorOracle {
    state: StateVector,
}

impl StatevectorOracle {
    pub fn new(state: StateVector) -> Self {
        StatevectorOracle { state }
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }
}

impl PurityOracle for StatevectorOracle {
    fn purity(&self, region: &Region) -> Result<BigRational> {
        let p = self.state.reduced_purity(region)?;
        BigRational::from_float(p).ok_or_else(|| Error::Assertion(format!("purity {p} is not finite")))
    }

    fn name(&self) -> &'static str {
        "statevector"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_purity::{rational_to_f64, GroupOracle};
    use crate::lattice::{EdgeId, LatticeConfig};

    fn lat(l: usize, d: u32) -> Lattice {
        Lattice::new(LatticeConfig::new(l, d)).unwrap()
    }

    fn region(lat: &Lattice, ids: &[usize]) -> Region {
        Region::from_edges(lat.num_edges(), ids.iter().map(|&e| EdgeId(e))).unwrap()
    }

    #[test]
    fn ground_state_is_normalised_with_expected_support() {
        for (l, d) in [(2, 2), (2, 3), (3, 2)] {
            let lat = lat(l, d);
            let psi = build_ground_state(&lat, DEFAULT_MEMORY_CAP).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            let support = psi.amplitudes().iter().filter(|a| a.norm_sqr() > 0.0).count();
            assert_eq!(support, (d as usize).pow(lat.num_vertices() as u32 - 1));
        }
    }

    #[test]
    fn sparse_and_dense_purities_agree() {
        let lat = lat(3, 2);
        let mut psi = build_ground_state(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let x = region(&lat, &[0, 7, 11]);
        let u = HaarSampler::new(3, 0).sample(8);
        psi.apply_unitary(&x, &u).unwrap();
        for ids in [&[0usize, 1, 2][..], &[0, 5, 7, 9, 11, 13, 17], &[4]] {
            let cut = psi.cut(&region(&lat, ids)).unwrap();
            let (a, b) = (psi.purity_sparse(&cut), psi.purity_dense(&cut));
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let lat = lat(3, 3);
        assert!(matches!(
            build_ground_state(&lat, DEFAULT_MEMORY_CAP),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn product_state_purities_are_one() {
        let lat = lat(2, 2);
        let psi = StateVector::product_zero(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let p = psi.reduced_purity(&region(&lat, &[0, 3, 5])).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_pair_purity() {
        let lat = lat(2, 2);
        let mut psi = StateVector::product_zero(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        psi.amps[0] = Complex64::new(h, 0.0);
        psi.amps[0b11] = Complex64::new(h, 0.0);
        let p = psi.reduced_purity(&region(&lat, &[0])).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let p = psi.reduced_purity(&region(&lat, &[0, 1])).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn statevector_matches_group_on_all_regions_of_small_torus() {
        let lat = lat(2, 2);
        let psi = build_ground_state(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let group = GroupOracle::new(&lat).unwrap();
        for mask in 1u32..(1 << 8) - 1 {
            let r = region(&lat, &(0..8).filter(|e| mask >> e & 1 == 1).collect::<Vec<_>>());
            let exact = rational_to_f64(&group.purity(&r).unwrap());
            assert!((psi.reduced_purity(&r).unwrap() - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn haar_samples_are_unitary_and_reproducible() {
        let mut a = HaarSampler::new(5, 2);
        let u = a.sample(4);
        for i in 0..4 {
            for j in 0..4 {
                let g: Complex64 = (0..4).map(|k| u[i * 4 + k] * u[j * 4 + k].conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-12);
            }
        }
        assert_eq!(HaarSampler::new(5, 2).sample(4), u);
        assert_ne!(HaarSampler::new(5, 3).sample(4), u);
    }

    #[test]
    fn unitary_preserves_norm_and_swaps_sites() {
        let lat = lat(2, 2);
        let mut psi = build_ground_state(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let mut s = HaarSampler::new(1, 0);
        psi.apply_unitary(&region(&lat, &[1, 4, 6]), &s.sample(8)).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        // X on site 2 maps |0> to |1> there
        let mut zero = StateVector::product_zero(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let x = [0.0, 1.0, 1.0, 0.0].map(|v| Complex64::new(v, 0.0));
        zero.apply_unitary(&region(&lat, &[2]), &x).unwrap();
        assert!((zero.amplitudes()[4].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_rejected() {
        let lat = lat(2, 2);
        let psi = StateVector::product_zero(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let x = region(&lat, &[0, 1]);
        assert!(matches!(
            mc_twirl_expectation(&psi, &x, &x, 50, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn twirl_estimate_is_deterministic() {
        let lat = lat(2, 2);
        let psi = build_ground_state(&lat, DEFAULT_MEMORY_CAP).unwrap();
        let x = region(&lat, &[0, 1]);
        let l = region(&lat, &[1, 2, 3]);
        let a = mc_twirl_expectation(&psi, &x, &l, 200, 9).unwrap();
        let b = mc_twirl_expectation(&psi, &x, &l, 200, 9).unwrap();
        assert_eq!(a, b);
    }
}
