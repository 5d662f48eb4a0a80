//! Edge regions, their set algebra, and boundary statistics.
//!
//! A [`Region`] is a bit set over the bonds of a [`Lattice`]. Boundary
//! statistics come in two flavours: the bond-level count of complement bonds
//! touching the region (with the number of such bonds having exactly two or
//! three neighbours inside), and the star-level count of vertices whose star
//! acts on both sides of the cut. The purity exponent is governed by the
//! latter; the difference between the two counts is the shape correction.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

use crate::error::{Error, Result};
use crate::lattice::{EdgeId, Lattice, Orientation, VertexId};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    len: usize,
    words: Vec<u64>,
}

impl Region {
    pub fn empty(num_edges: usize) -> Self {
        Region {
            len: num_edges,
            words: vec![0; num_edges.div_ceil(64)],
        }
    }

    pub fn full(num_edges: usize) -> Self {
        let mut r = Region::empty(num_edges);
        for w in r.words.iter_mut() {
            *w = u64::MAX;
        }
        r.trim();
        r
    }

    pub fn from_edges<I: IntoIterator<Item = EdgeId>>(num_edges: usize, edges: I) -> Result<Self> {
        let mut r = Region::empty(num_edges);
        for e in edges {
            if e.0 >= num_edges {
                return Err(Error::InvalidId {
                    kind: "edge",
                    id: e.0,
                    count: num_edges,
                });
            }
            r.insert(e);
        }
        Ok(r)
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Number of bonds of the lattice this region lives on.
    pub fn universe(&self) -> usize {
        self.len
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        e.0 < self.len && self.words[e.0 / 64] >> (e.0 % 64) & 1 == 1
    }

    pub fn insert(&mut self, e: EdgeId) {
        assert!(e.0 < self.len, "edge {} out of range", e.0);
        self.words[e.0 / 64] |= 1 << (e.0 % 64);
    }

    pub fn remove(&mut self, e: EdgeId) {
        if e.0 < self.len {
            self.words[e.0 / 64] &= !(1 << (e.0 % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(EdgeId(i * 64 + b))
                }
            })
        })
    }

    fn same_universe(&self, other: &Region) -> Result<()> {
        if self.len == other.len {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                expected: self.len,
                found: other.len,
            })
        }
    }

    fn zip_with(&self, other: &Region, f: impl Fn(u64, u64) -> u64) -> Region {
        assert_eq!(self.len, other.len, "regions live on different lattices");
        let mut out = Region {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        };
        out.trim();
        out
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn intersection_count(&self, other: &Region) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> Region {
        let mut out = Region {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    /// Complement bonds sharing an endpoint with the region.
    pub fn outer_layer(&self, lattice: &Lattice) -> Region {
        let mut out = Region::empty(self.len);
        for e in self.iter() {
            for &x in lattice.neighbors_unchecked(e.0) {
                if !self.contains(x) {
                    out.insert(x);
                }
            }
        }
        out
    }

    /// Region bonds as sorted `(row, col, orientation)` triples.
    pub fn to_triples(&self, lattice: &Lattice) -> Vec<(usize, usize, Orientation)> {
        let mut v: Vec<_> = self.iter().map(|e| lattice.edge_coords(e)).collect();
        v.sort();
        v
    }

    pub fn from_triples(lattice: &Lattice, triples: &[(isize, isize, Orientation)]) -> Result<Self> {
        Region::from_edges(
            lattice.num_edges(),
            triples.iter().map(|&(r, c, o)| lattice.edge_at(r, c, o)),
        )
    }

    /// All bonds on the boundary of the given faces.
    pub fn from_faces<I>(lattice: &Lattice, faces: I) -> Self
    where
        I: IntoIterator<Item = (isize, isize)>,
    {
        let mut r = Region::empty(lattice.num_edges());
        for (row, col) in faces {
            for e in lattice.face(lattice.face_at(row, col)).edges {
                r.insert(e);
            }
        }
        r
    }

    /// Closure of an `height x width` block of faces with top-left face `(row, col)`.
    pub fn rectangle(lattice: &Lattice, row: isize, col: isize, height: usize, width: usize) -> Self {
        Region::from_faces(
            lattice,
            (0..height as isize).flat_map(|i| (0..width as isize).map(move |j| (row + i, col + j))),
        )
    }

    /// Closure of a square block of faces minus its interior `thickness` faces in.
    pub fn annulus(lattice: &Lattice, row: isize, col: isize, size: usize, thickness: usize) -> Self {
        let s = size as isize;
        let t = thickness as isize;
        Region::from_faces(
            lattice,
            (0..s)
                .flat_map(|i| (0..s).map(move |j| (i, j)))
                .filter(|&(i, j)| i < t || j < t || i >= s - t || j >= s - t)
                .map(|(i, j)| (row + i, col + j)),
        )
    }

    /// The four bonds of one plaquette.
    pub fn plaquette(lattice: &Lattice, row: isize, col: isize) -> Self {
        Region::from_faces(lattice, [(row, col)])
    }

    /// Closure of the `2r x 2r` block of faces around vertex `(row, col)`.
    pub fn disk(lattice: &Lattice, row: isize, col: isize, radius: usize) -> Self {
        let r = radius as isize;
        Region::rectangle(lattice, row - r, col - r, 2 * radius, 2 * radius)
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|e| e.0)).finish()
    }
}

impl BitOr for &Region {
    type Output = Region;
    fn bitor(self, rhs: &Region) -> Region {
        self.zip_with(rhs, |a, b| a | b)
    }
}

impl BitAnd for &Region {
    type Output = Region;
    fn bitand(self, rhs: &Region) -> Region {
        self.zip_with(rhs, |a, b| a & b)
    }
}

impl Sub for &Region {
    type Output = Region;
    fn sub(self, rhs: &Region) -> Region {
        self.zip_with(rhs, |a, b| a & !b)
    }
}

impl Not for &Region {
    type Output = Region;
    fn not(self) -> Region {
        self.complement()
    }
}

pub fn region_union(a: &Region, b: &Region) -> Result<Region> {
    a.same_universe(b)?;
    Ok(a | b)
}

pub fn region_diff(a: &Region, b: &Region) -> Result<Region> {
    a.same_universe(b)?;
    Ok(a - b)
}

pub fn region_intersection(a: &Region, b: &Region) -> Result<Region> {
    a.same_universe(b)?;
    Ok(a & b)
}

pub fn region_complement(a: &Region) -> Region {
    a.complement()
}

impl Lattice {
    /// Vertices whose star meets both the region and its complement.
    pub fn crossing_stars(&self, region: &Region) -> Result<Vec<VertexId>> {
        if region.universe() != self.num_edges() {
            return Err(Error::LatticeMismatch {
                expected: self.num_edges(),
                found: region.universe(),
            });
        }
        Ok(self
            .stars()
            .iter()
            .filter(|s| {
                let inside = s.edges.iter().filter(|&&e| region.contains(e)).count();
                inside > 0 && inside < 4
            })
            .map(|s| s.vertex)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryStats {
    /// Complement bonds sharing an endpoint with the region.
    pub boundary_edges: Vec<EdgeId>,
    /// Complement bonds with exactly two neighbours in the region.
    pub n2: usize,
    /// Complement bonds with exactly three neighbours in the region.
    pub n3: usize,
    /// Stars acting on both sides of the cut.
    pub crossing: Vec<VertexId>,
    /// Connected pieces of the cut, as sets of crossing stars joined when they
    /// share a plaquette. Sorted by smallest member.
    pub components: Vec<Vec<VertexId>>,
}

impl BoundaryStats {
    pub fn boundary_size(&self) -> usize {
        self.boundary_edges.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Number of independent-candidate stars on the cut.
    pub fn crossing_count(&self) -> usize {
        self.crossing.len()
    }

    /// Bond-level boundary length minus the number of crossing stars, the
    /// shape-dependent part of the purity exponent (in units of `log2 d`).
    pub fn shape_correction(&self) -> i64 {
        self.boundary_size() as i64 - self.crossing_count() as i64
    }

    /// Exponent `k` with purity `d^k` under the closed-form boundary law.
    pub fn purity_exponent(&self) -> i64 {
        -(self.boundary_size() as i64) + self.shape_correction() + self.n_components() as i64
    }
}

pub fn boundary_stats(lattice: &Lattice, region: &Region) -> Result<BoundaryStats> {
    if region.universe() != lattice.num_edges() {
        return Err(Error::LatticeMismatch {
            expected: lattice.num_edges(),
            found: region.universe(),
        });
    }
    if region.is_empty() || region.is_full() {
        return Err(Error::DegenerateRegion);
    }
    let mut boundary_edges = Vec::new();
    let (mut n2, mut n3) = (0, 0);
    for e in 0..lattice.num_edges() {
        if region.contains(EdgeId(e)) {
            continue;
        }
        let inside = lattice
            .neighbors_unchecked(e)
            .iter()
            .filter(|&&x| region.contains(x))
            .count();
        if inside > 0 {
            boundary_edges.push(EdgeId(e));
        }
        match inside {
            2 => n2 += 1,
            3 => n3 += 1,
            _ => {}
        }
    }
    let crossing = lattice.crossing_stars(region)?;
    let components = vertex_components(lattice, &crossing);
    Ok(BoundaryStats {
        boundary_edges,
        n2,
        n3,
        crossing,
        components,
    })
}

/// Components of a vertex set under shared-plaquette adjacency, each sorted,
/// ordered by smallest member.
pub fn vertex_components(lattice: &Lattice, vertices: &[VertexId]) -> Vec<Vec<VertexId>> {
    let mut member = vec![false; lattice.num_vertices()];
    for v in vertices {
        member[v.0] = true;
    }
    let mut seen = vec![false; lattice.num_vertices()];
    let mut sorted: Vec<VertexId> = vertices.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &start in &sorted {
        if seen[start.0] {
            continue;
        }
        seen[start.0] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in lattice.vertex_face_neighbors(v) {
                if member[w.0] && !seen[w.0] {
                    seen[w.0] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Number of connected components of the graph `(V, region)`, isolated
/// vertices included.
pub fn graph_components(lattice: &Lattice, region: &Region) -> usize {
    let mut parent: Vec<usize> = (0..lattice.num_vertices()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = lattice.num_vertices();
    for e in region.iter() {
        let [a, b] = lattice.endpoints(e);
        let (ra, rb) = (find(&mut parent, a.0), find(&mut parent, b.0));
        if ra != rb {
            parent[ra] = rb;
            comps -= 1;
        }
    }
    comps
}

/// Bonds incident to any of the given vertices.
pub fn star_closure(lattice: &Lattice, vertices: &[VertexId]) -> Region {
    let mut r = Region::empty(lattice.num_edges());
    for v in vertices {
        for e in lattice.star(*v).edges {
            r.insert(e);
        }
    }
    r
}
