//! Periodic square lattice with qudits on the bonds.
//!
//! Vertices carry star operators, faces carry plaquette operators. Every bond
//! is oriented: horizontal bonds point to increasing column, vertical bonds to
//! increasing row. A star acts with `X` on its outgoing bonds and `X^-1` on its
//! incoming ones, and a plaquette constrains the oriented circulation of its
//! boundary labels. For `d = 2` the orientation is invisible.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "h")]
    Horizontal,
    #[serde(rename = "v")]
    Vertical,
}

impl Orientation {
    pub fn symbol(self) -> char {
        match self {
            Orientation::Horizontal => 'h',
            Orientation::Vertical => 'v',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "h" | "H" => Some(Orientation::Horizontal),
            "v" | "V" => Some(Orientation::Vertical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId(pub usize);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Linear size of the torus.
    pub size: usize,
    /// Local qudit dimension.
    pub dim: u32,
}

impl LatticeConfig {
    pub fn new(size: usize, dim: u32) -> Self {
        Self { size, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(Error::Config(format!(
                "lattice size must be at least 2, got {}",
                self.size
            )));
        }
        if self.dim < 2 {
            return Err(Error::Config(format!(
                "qudit dimension must be at least 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// The four bonds incident to a vertex, with the exponent sign of `X` on each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarSupport {
    pub vertex: VertexId,
    pub edges: [EdgeId; 4],
    pub signs: [i8; 4],
}

/// The four bonds around a face, with their orientation relative to the
/// counter-clockwise circulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceSupport {
    pub face: FaceId,
    pub edges: [EdgeId; 4],
    pub signs: [i8; 4],
}

#[derive(Debug, Clone)]
pub struct Lattice {
    config: LatticeConfig,
    stars: Vec<StarSupport>,
    faces: Vec<FaceSupport>,
    endpoints: Vec<[VertexId; 2]>,
    edge_faces: Vec<[FaceId; 2]>,
    neighbors: Vec<Vec<EdgeId>>,
}

impl Lattice {
    pub fn new(config: LatticeConfig) -> Result<Self> {
        config.validate()?;
        let l = config.size;
        let n_cells = l * l;
        let n_edges = 2 * n_cells;

        let mut lat = Lattice {
            config,
            stars: Vec::with_capacity(n_cells),
            faces: Vec::with_capacity(n_cells),
            endpoints: vec![[VertexId(0); 2]; n_edges],
            edge_faces: vec![[FaceId(0); 2]; n_edges],
            neighbors: vec![Vec::new(); n_edges],
        };

        for r in 0..l {
            for c in 0..l {
                let v = lat.vertex_at(r as isize, c as isize);
                lat.stars.push(StarSupport {
                    vertex: v,
                    edges: [
                        lat.edge_at(r as isize, c as isize, Orientation::Horizontal),
                        lat.edge_at(r as isize, c as isize, Orientation::Vertical),
                        lat.edge_at(r as isize, c as isize - 1, Orientation::Horizontal),
                        lat.edge_at(r as isize - 1, c as isize, Orientation::Vertical),
                    ],
                    signs: [1, 1, -1, -1],
                });
                lat.faces.push(FaceSupport {
                    face: FaceId(v.0),
                    edges: [
                        lat.edge_at(r as isize, c as isize, Orientation::Horizontal),
                        lat.edge_at(r as isize, c as isize + 1, Orientation::Vertical),
                        lat.edge_at(r as isize + 1, c as isize, Orientation::Horizontal),
                        lat.edge_at(r as isize, c as isize, Orientation::Vertical),
                    ],
                    signs: [1, 1, -1, -1],
                });
            }
        }

        for e in 0..n_edges {
            let (r, c, o) = lat.edge_coords(EdgeId(e));
            let (r, c) = (r as isize, c as isize);
            let head = match o {
                Orientation::Horizontal => lat.vertex_at(r, c + 1),
                Orientation::Vertical => lat.vertex_at(r + 1, c),
            };
            lat.endpoints[e] = [lat.vertex_at(r, c), head];
            // the face on the positive side first, then the one behind
            lat.edge_faces[e] = match o {
                Orientation::Horizontal => [lat.face_at(r, c), lat.face_at(r - 1, c)],
                Orientation::Vertical => [lat.face_at(r, c), lat.face_at(r, c - 1)],
            };
        }

        for e in 0..n_edges {
            let mut nb: Vec<EdgeId> = lat.endpoints[e]
                .iter()
                .flat_map(|v| lat.stars[v.0].edges)
                .filter(|x| x.0 != e)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            lat.neighbors[e] = nb;
        }
        Ok(lat)
    }

    pub fn config(&self) -> LatticeConfig {
        self.config
    }

    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn dim(&self) -> u32 {
        self.config.dim
    }

    pub fn num_edges(&self) -> usize {
        self.endpoints.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.stars.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.config.size as isize) as usize
    }

    pub fn vertex_at(&self, row: isize, col: isize) -> VertexId {
        VertexId(self.wrap(row) * self.config.size + self.wrap(col))
    }

    pub fn face_at(&self, row: isize, col: isize) -> FaceId {
        FaceId(self.wrap(row) * self.config.size + self.wrap(col))
    }

    pub fn edge_at(&self, row: isize, col: isize, orientation: Orientation) -> EdgeId {
        let cell = self.wrap(row) * self.config.size + self.wrap(col);
        EdgeId(2 * cell + orientation as usize)
    }

    pub fn edge_coords(&self, e: EdgeId) -> (usize, usize, Orientation) {
        let cell = e.0 / 2;
        let o = if e.0.is_multiple_of(2) {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        (cell / self.config.size, cell % self.config.size, o)
    }

    pub fn vertex_coords(&self, v: VertexId) -> (usize, usize) {
        (v.0 / self.config.size, v.0 % self.config.size)
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e.0 < self.num_edges() {
            Ok(())
        } else {
            Err(Error::InvalidId {
                kind: "edge",
                id: e.0,
                count: self.num_edges(),
            })
        }
    }

    pub fn star(&self, v: VertexId) -> &StarSupport {
        &self.stars[v.0]
    }

    pub fn stars(&self) -> &[StarSupport] {
        &self.stars
    }

    pub fn face(&self, p: FaceId) -> &FaceSupport {
        &self.faces[p.0]
    }

    pub fn faces(&self) -> &[FaceSupport] {
        &self.faces
    }

    /// Tail and head vertex of a bond.
    pub fn endpoints(&self, e: EdgeId) -> [VertexId; 2] {
        self.endpoints[e.0]
    }

    pub fn edge_faces(&self, e: EdgeId) -> [FaceId; 2] {
        self.edge_faces[e.0]
    }

    /// Bonds sharing at least one endpoint with `e`, excluding `e`.
    pub fn edge_neighbors(&self, e: EdgeId) -> Result<&[EdgeId]> {
        self.check_edge(e)?;
        Ok(&self.neighbors[e.0])
    }

    pub(crate) fn neighbors_unchecked(&self, e: usize) -> &[EdgeId] {
        &self.neighbors[e]
    }

    /// Vertices sharing a face with `v` (8-neighbourhood on the torus).
    pub fn vertex_face_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let (r, c) = self.vertex_coords(v);
        let (r, c) = (r as isize, c as isize);
        let mut out = Vec::with_capacity(8);
        for dr in -1..=1 {
            for dc in -1..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let w = self.vertex_at(r + dr, c + dc);
                if w != v {
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_torus_formula() {
        let lat = Lattice::new(LatticeConfig::new(2, 2)).unwrap();
        assert_eq!((lat.num_edges(), lat.num_vertices(), lat.num_faces()), (8, 4, 4));
        let lat = Lattice::new(LatticeConfig::new(4, 3)).unwrap();
        assert_eq!((lat.num_edges(), lat.num_vertices(), lat.num_faces()), (32, 16, 16));
    }

    #[test]
    fn rejects_small_configs() {
        assert!(matches!(Lattice::new(LatticeConfig::new(1, 2)), Err(Error::Config(_))));
        assert!(matches!(Lattice::new(LatticeConfig::new(3, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn coordinates_round_trip() {
        let lat = Lattice::new(LatticeConfig::new(5, 2)).unwrap();
        for e in 0..lat.num_edges() {
            let (r, c, o) = lat.edge_coords(EdgeId(e));
            assert_eq!(lat.edge_at(r as isize, c as isize, o), EdgeId(e));
            assert_eq!(lat.edge_at(r as isize + 5, c as isize - 10, o), EdgeId(e));
        }
    }

    #[test]
    fn incidence_is_consistent() {
        for l in [2, 3, 4, 7] {
            let lat = Lattice::new(LatticeConfig::new(l, 3)).unwrap();
            let n = lat.num_edges();
            let mut star_count = vec![0; n];
            let mut face_count = vec![0; n];
            for s in lat.stars() {
                for e in s.edges {
                    star_count[e.0] += 1;
                    assert!(lat.endpoints(e).contains(&s.vertex));
                }
            }
            for f in lat.faces() {
                for e in f.edges {
                    face_count[e.0] += 1;
                    assert!(lat.edge_faces(e).contains(&f.face));
                }
            }
            assert!(star_count.iter().all(|&k| k == 2));
            assert!(face_count.iter().all(|&k| k == 2));
            let total: usize = lat.stars().iter().map(|s| s.edges.len()).sum();
            assert_eq!(total, 2 * n);
        }
    }

    #[test]
    fn star_and_face_signs_commute() {
        // A star and a plaquette share either zero or two bonds, and the
        // signed overlap must vanish for the operators to commute for any d.
        let lat = Lattice::new(LatticeConfig::new(4, 5)).unwrap();
        for s in lat.stars() {
            for f in lat.faces() {
                let mut overlap = 0i32;
                for (se, ss) in s.edges.iter().zip(s.signs) {
                    for (fe, fs) in f.edges.iter().zip(f.signs) {
                        if se == fe {
                            overlap += ss as i32 * fs as i32;
                        }
                    }
                }
                assert_eq!(overlap, 0);
            }
        }
    }

    #[test]
    fn six_neighbors_on_large_torus() {
        let lat = Lattice::new(LatticeConfig::new(4, 2)).unwrap();
        for e in 0..lat.num_edges() {
            let nb = lat.edge_neighbors(EdgeId(e)).unwrap();
            assert_eq!(nb.len(), 6);
            for x in nb {
                assert!(lat.edge_neighbors(*x).unwrap().contains(&EdgeId(e)));
            }
        }
    }

    #[test]
    fn small_torus_neighbors_match_enumeration() {
        let lat = Lattice::new(LatticeConfig::new(2, 2)).unwrap();
        for e in 0..lat.num_edges() {
            let ends = lat.endpoints(EdgeId(e));
            let brute: Vec<usize> = (0..lat.num_edges())
                .filter(|&x| x != e)
                .filter(|&x| lat.endpoints(EdgeId(x)).iter().any(|v| ends.contains(v)))
                .collect();
            let got: Vec<usize> = lat.edge_neighbors(EdgeId(e)).unwrap().iter().map(|x| x.0).collect();
            assert_eq!(got, brute);
            // each bond is parallel to a twin sharing both endpoints
            assert_eq!(got.len(), 5);
        }
        assert!(lat.edge_neighbors(EdgeId(8)).is_err());
    }
}
