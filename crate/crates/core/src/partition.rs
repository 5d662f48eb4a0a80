//! The four-region arrangement used to extract the topological purity.
//!
//! `ABC` is a square annulus of plaquettes. `A` is its top band, `C` its
//! bottom band, and `B_left` / `B_right` are the two vertical arms joining
//! them. Bonds shared by an arm and a band belong to the arm, so every
//! composite (`AB`, `BC`, `B`, `ABC`) is the bond closure of its plaquettes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::region::{boundary_stats, star_closure, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionGeometry {
    /// Top-left plaquette of the annulus.
    pub row: isize,
    pub col: isize,
    /// Outer side length in plaquettes.
    pub size: usize,
    /// Band and arm thickness in plaquettes.
    pub thickness: usize,
}

impl PartitionGeometry {
    pub fn hole(&self) -> usize {
        self.size.saturating_sub(2 * self.thickness)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Composite {
    AB,
    BC,
    B,
    ABC,
}

impl Composite {
    pub const ALL: [Composite; 4] = [Composite::AB, Composite::BC, Composite::B, Composite::ABC];

    pub fn name(self) -> &'static str {
        match self {
            Composite::AB => "AB",
            Composite::BC => "BC",
            Composite::B => "B",
            Composite::ABC => "ABC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Marker {
    /// Outer boundary component of `ABC`.
    Outer,
    /// Inner boundary component of `ABC` (the rim of the hole).
    Inner,
    A,
    C,
    BLeft,
    BRight,
}

impl Marker {
    pub fn name(self) -> &'static str {
        match self {
            Marker::Outer => "(dABC)_1",
            Marker::Inner => "(dABC)_2",
            Marker::A => "A",
            Marker::C => "C",
            Marker::BLeft => "B_left",
            Marker::BRight => "B_right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Annular,
    SimplyConnected,
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub kind: PartitionKind,
    pub a: Region,
    pub b_left: Region,
    pub b_right: Region,
    pub c: Region,
    pub d: Region,
    pub ab: Region,
    pub bc: Region,
    pub b: Region,
    pub abc: Region,
    /// Stars of each labelled boundary component of `ABC` (outer, inner).
    boundary_components: Option<(Region, Region)>,
}

impl Partition {
    pub fn composite(&self, which: Composite) -> &Region {
        match which {
            Composite::AB => &self.ab,
            Composite::BC => &self.bc,
            Composite::B => &self.b,
            Composite::ABC => &self.abc,
        }
    }

    pub fn is_labeled(&self) -> bool {
        self.boundary_components.is_some()
    }

    /// Bonds a domain must hit to count as touching the marker: for the two
    /// boundary components, every bond incident to one of their stars; for a
    /// subregion, its bonds plus the complement bonds adjacent to it.
    pub fn marker(&self, lattice: &Lattice, which: Marker) -> Result<Region> {
        let sub = |r: &Region| r | &r.outer_layer(lattice);
        match which {
            Marker::Outer | Marker::Inner => {
                let (outer, inner) = self
                    .boundary_components
                    .as_ref()
                    .ok_or_else(|| Error::Precondition("partition has no labelled boundary components".into()))?;
                Ok(if which == Marker::Outer {
                    outer.clone()
                } else {
                    inner.clone()
                })
            }
            Marker::A => Ok(sub(&self.a)),
            Marker::C => Ok(sub(&self.c)),
            Marker::BLeft => Ok(sub(&self.b_left)),
            Marker::BRight => Ok(sub(&self.b_right)),
        }
    }

    /// Build from explicit labelled pieces. The pieces must be pairwise
    /// disjoint; composites are their unions.
    pub fn from_pieces(lattice: &Lattice, a: Region, b_left: Region, b_right: Region, c: Region) -> Result<Self> {
        let pieces = [&a, &b_left, &b_right, &c];
        for (i, p) in pieces.iter().enumerate() {
            if p.universe() != lattice.num_edges() {
                return Err(Error::LatticeMismatch {
                    expected: lattice.num_edges(),
                    found: p.universe(),
                });
            }
            for q in &pieces[i + 1..] {
                if p.intersects(q) {
                    return Err(Error::Config("partition pieces overlap".into()));
                }
            }
        }
        let b = &b_left | &b_right;
        let ab = &a | &b;
        let bc = &b | &c;
        let abc = &ab | &c;
        let d = abc.complement();
        let stats = boundary_stats(lattice, &abc)?;
        let (kind, boundary_components) = match stats.components.len() {
            1 => (PartitionKind::SimplyConnected, None),
            2 => {
                let mut comps = stats.components.clone();
                // the longer rim is the outer one
                comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
                (
                    PartitionKind::Annular,
                    Some((star_closure(lattice, &comps[0]), star_closure(lattice, &comps[1]))),
                )
            }
            n => {
                return Err(Error::Config(format!(
                    "ABC must have one or two boundary components, found {n}"
                )))
            }
        };
        let p = Partition {
            kind,
            a,
            b_left,
            b_right,
            c,
            d,
            ab,
            bc,
            b,
            abc,
            boundary_components,
        };
        p.check_length_identity(lattice)?;
        Ok(p)
    }

    /// `|dAB| + |dBC| = |dB| + |dABC|` in crossing stars.
    fn check_length_identity(&self, lattice: &Lattice) -> Result<()> {
        let len = |r: &Region| -> Result<usize> { Ok(lattice.crossing_stars(r)?.len()) };
        let lhs = len(&self.ab)? + len(&self.bc)?;
        let rhs = len(&self.b)? + len(&self.abc)?;
        if lhs != rhs {
            return Err(Error::Assertion(format!(
                "boundary lengths do not cancel: |dAB|+|dBC| = {lhs}, |dB|+|dABC| = {rhs}"
            )));
        }
        Ok(())
    }
}

/// The annular arrangement.
pub fn standard_partition(lattice: &Lattice, geom: PartitionGeometry) -> Result<Partition> {
    let l = lattice.size();
    if geom.thickness < 2 {
        return Err(Error::Config(format!(
            "partition thickness must be at least 2, got {}",
            geom.thickness
        )));
    }
    if geom.hole() < 2 || geom.size < 2 * geom.thickness + 2 {
        return Err(Error::Config(format!(
            "partition hole must be at least 2 plaquettes wide (size {}, thickness {})",
            geom.size, geom.thickness
        )));
    }
    if geom.size + 2 > l {
        return Err(Error::Config(format!(
            "partition of size {} does not fit on a torus of size {l} with clearance 2",
            geom.size
        )));
    }
    let (r0, c0) = (geom.row, geom.col);
    let s = geom.size as isize;
    let t = geom.thickness as isize;
    let faces = |rows: std::ops::Range<isize>, cols: std::ops::Range<isize>| {
        let cols2 = cols.clone();
        rows.flat_map(move |i| cols2.clone().map(move |j| (r0 + i, c0 + j)))
            .collect::<Vec<_>>()
    };
    let a_faces = faces(0..t, 0..s);
    let c_faces = faces(s - t..s, 0..s);
    let bl_faces = faces(t..s - t, 0..t);
    let br_faces = faces(t..s - t, s - t..s);

    let b_left = Region::from_faces(lattice, bl_faces.iter().copied());
    let b_right = Region::from_faces(lattice, br_faces.iter().copied());
    let b = &b_left | &b_right;
    let a = &Region::from_faces(lattice, a_faces.iter().copied()) - &b;
    let c = &Region::from_faces(lattice, c_faces.iter().copied()) - &b;
    let p = Partition::from_pieces(lattice, a, b_left, b_right, c)?;
    if p.kind != PartitionKind::Annular {
        return Err(Error::Assertion("annular partition lost its hole".into()));
    }
    Ok(p)
}

/// Three side-by-side blocks `A | B | C` forming a rectangle: the arrangement
/// whose `ABC` has a single boundary. `B_right` is empty.
pub fn simply_connected_partition(
    lattice: &Lattice,
    row: isize,
    col: isize,
    height: usize,
    widths: [usize; 3],
) -> Result<Partition> {
    let total: usize = widths.iter().sum();
    if widths.iter().any(|&w| w < 2) || height < 2 {
        return Err(Error::Config("blocks must be at least 2 plaquettes wide".into()));
    }
    if total + 2 > lattice.size() || height + 2 > lattice.size() {
        return Err(Error::Config(format!(
            "strip {height}x{total} does not fit on a torus of size {}",
            lattice.size()
        )));
    }
    let (wa, wb) = (widths[0] as isize, widths[1] as isize);
    let b = Region::rectangle(lattice, row, col + wa, height, widths[1]);
    let a = &Region::rectangle(lattice, row, col, height, widths[0]) - &b;
    let c = &Region::rectangle(lattice, row, col + wa + wb, height, widths[2]) - &b;
    let empty = Region::empty(lattice.num_edges());
    Partition::from_pieces(lattice, a, b, empty, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeConfig;

    fn geom() -> PartitionGeometry {
        PartitionGeometry {
            row: 2,
            col: 2,
            size: 8,
            thickness: 2,
        }
    }

    #[test]
    fn annular_boundary_counts() {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let p = standard_partition(&lat, geom()).unwrap();
        let n = |r: &Region| boundary_stats(&lat, r).unwrap().n_components();
        assert_eq!(n(&p.ab), 1);
        assert_eq!(n(&p.bc), 1);
        assert_eq!(n(&p.b), 2);
        assert_eq!(n(&p.abc), 2);
        assert!(p.is_labeled());
        assert_eq!((&(&p.a | &p.b) | &p.c), p.abc);
        assert!(!p.a.intersects(&p.c));
    }

    #[test]
    fn simply_connected_boundary_counts() {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let p = simply_connected_partition(&lat, 3, 1, 4, [3, 3, 3]).unwrap();
        for r in [&p.ab, &p.bc, &p.b, &p.abc] {
            assert_eq!(boundary_stats(&lat, r).unwrap().n_components(), 1);
        }
        assert!(!p.is_labeled());
        assert!(p.marker(&lat, Marker::Outer).is_err());
    }

    #[test]
    fn rejects_geometry_that_does_not_fit() {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let big = PartitionGeometry { size: 11, ..geom() };
        assert!(matches!(standard_partition(&lat, big), Err(Error::Config(_))));
        let thin = PartitionGeometry { thickness: 1, ..geom() };
        assert!(matches!(standard_partition(&lat, thin), Err(Error::Config(_))));
        let no_hole = PartitionGeometry { size: 5, ..geom() };
        assert!(matches!(standard_partition(&lat, no_hole), Err(Error::Config(_))));
    }

    #[test]
    fn outer_and_inner_markers_are_disjoint() {
        let lat = Lattice::new(LatticeConfig::new(12, 2)).unwrap();
        let p = standard_partition(&lat, geom()).unwrap();
        let outer = p.marker(&lat, Marker::Outer).unwrap();
        let inner = p.marker(&lat, Marker::Inner).unwrap();
        assert!(!outer.intersects(&inner));
        // outer rim is the 8x8 perimeter (32 stars), inner the 4x4 one (16)
        assert!(outer.count() > inner.count());
    }
}
