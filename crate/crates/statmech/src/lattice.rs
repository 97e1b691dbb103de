//! Space-time lattice and the disorder carried by a measurement record.
//!
//! Spins `s_{t,i}` live on time slices `t = 0..=T`. Layer `t ≥ 1` contributes
//! a temporal bond `(t−1,i)–(t,i)` per site carrying `m^x_{t,i}` and a
//! spatial bond `(t,i)–(t,i+1)` per chain bond carrying `m^zz_{t,i}`.

use repcode::model::{n_bonds, Boundary, MeasurementRecord};

use crate::error::{Result, StatMechError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub l: usize,
    /// Number of layers.
    pub t: usize,
    pub boundary: Boundary,
}

impl Lattice {
    /// Open or periodic lattice. A periodic chain needs `L ≥ 2`; at `L = 2`
    /// the two sites are joined by a double bond.
    pub fn new(l: usize, t: usize, boundary: Boundary) -> Result<Self> {
        if l == 0 || t == 0 || boundary == Boundary::Periodic && l < 2 {
            return Err(StatMechError::Shape(format!("lattice L = {l}, T = {t}")));
        }
        Ok(Self { l, t, boundary })
    }

    pub fn n_bonds(&self) -> usize {
        n_bonds(self.l, self.boundary)
    }

    /// Sites joined by chain bond `b`.
    pub fn bond_sites(&self, b: usize) -> (usize, usize) {
        (b, (b + 1) % self.l)
    }

    pub fn n_spins(&self) -> usize {
        self.l * (self.t + 1)
    }

    pub fn n_edges(&self) -> usize {
        self.t * (self.l + self.n_bonds())
    }

    /// Edges as pairs of spin indices `t·L + i`: temporal bonds of each layer,
    /// then its spatial bonds.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.n_edges());
        for t in 1..=self.t {
            for i in 0..self.l {
                out.push(Edge { kind: EdgeKind::Temporal, layer: t - 1, index: i, a: (t - 1) * self.l + i, b: t * self.l + i });
            }
            for bond in 0..self.n_bonds() {
                let (i, j) = self.bond_sites(bond);
                out.push(Edge { kind: EdgeKind::Spatial, layer: t - 1, index: bond, a: t * self.l + i, b: t * self.l + j });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Temporal,
    Spatial,
}

/// A lattice edge; `layer` is the zero-based record layer and `index` the
/// site (temporal) or chain bond (spatial).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub layer: usize,
    pub index: usize,
    pub a: usize,
    pub b: usize,
}

/// A record placed on its lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    pub lattice: Lattice,
    pub record: MeasurementRecord,
}

impl DisorderRealization {
    pub fn new(lattice: Lattice, record: MeasurementRecord) -> Result<Self> {
        let ok = record.is_valid()
            && record.m_x.len() == lattice.t
            && record.m_zz.len() == lattice.t
            && record.m_x.iter().all(|r| r.len() == lattice.l)
            && record.m_zz.iter().all(|r| r.len() == lattice.n_bonds());
        if !ok {
            return Err(StatMechError::Shape("record does not match the lattice".into()));
        }
        Ok(Self { lattice, record })
    }

    /// Record encoded by the bits of `code` (bit set = outcome −1).
    pub fn from_code(lattice: Lattice, code: u64) -> Self {
        let record = MeasurementRecord::from_code(lattice.t, lattice.l, lattice.n_bonds(), code);
        Self { lattice, record }
    }

    pub fn n_outcomes(&self) -> usize {
        self.lattice.n_edges()
    }

    /// Outcome carried by an edge.
    pub fn outcome(&self, e: &Edge) -> i8 {
        match e.kind {
            EdgeKind::Temporal => self.record.m_x[e.layer][e.index],
            EdgeKind::Spatial => self.record.m_zz[e.layer][e.index],
        }
    }
}

/// Spin `i` of a slice stored as bits, site 0 most significant, bit set for down.
pub fn spin(bits: usize, l: usize, i: usize) -> i8 {
    if bits >> (l - 1 - i) & 1 == 1 {
        -1
    } else {
        1
    }
}
