use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::DomainScale;
use crate::geometry::vec3::Vec3;
use crate::geometry::Aabb;

/// Axis-aligned flow domain (mm). Inlet is the -x face, outlet the +x face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl DomainBox {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        DomainBox { min, max }
    }

    pub fn extent(&self) -> Vec3 {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb { min: self.min, max: self.max }
    }

    /// Domain around a body: gaps of `upstream`/`downstream` body lengths
    /// ahead of and behind it, `lateral` times the largest cross-stream extent
    /// to the sides. The box is then grown so `cells` gives cubic cells;
    /// extra length goes downstream and symmetrically to the sides.
    pub fn around(body: &Aabb, scale: &DomainScale, cells: [usize; 3]) -> Self {
        let e = body.extent();
        let big = e.iter().fold(0.0f64, |a, &b| a.max(b));
        let floor = 1e-3 * big.max(1e-9);
        let lx = e[0].max(floor);
        let lat = e[1].max(e[2]).max(floor) * scale.lateral;
        let mut min = [body.min[0] - scale.upstream * lx, body.min[1] - lat, body.min[2] - lat];
        let mut max = [body.max[0] + scale.downstream * lx, body.max[1] + lat, body.max[2] + lat];
        let h = (0..3).map(|a| (max[a] - min[a]) / cells[a] as f64).fold(0.0, f64::max);
        let want = [cells[0] as f64 * h, cells[1] as f64 * h, cells[2] as f64 * h];
        max[0] = min[0] + want[0];
        for a in 1..3 {
            let c = 0.5 * (min[a] + max[a]);
            min[a] = c - 0.5 * want[a];
            max[a] = c + 0.5 * want[a];
        }
        DomainBox { min, max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Patch {
    Inlet,
    Outlet,
    Symmetry,
    Body,
}

impl Patch {
    pub const ALL: [Patch; 4] = [Patch::Inlet, Patch::Outlet, Patch::Symmetry, Patch::Body];

    pub fn as_str(self) -> &'static str {
        match self {
            Patch::Inlet => "inlet",
            Patch::Outlet => "outlet",
            Patch::Symmetry => "symmetry",
            Patch::Body => "body",
        }
    }

    /// Numeric label used in exported cell data (0 marks volume cells).
    pub fn id(self) -> u8 {
        match self {
            Patch::Inlet => 1,
            Patch::Outlet => 2,
            Patch::Symmetry => 3,
            Patch::Body => 4,
        }
    }
}

/// Octree leaf: level-`level` cell at integer position `ijk` of the grid
/// `base_cells * 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub level: u8,
    pub ijk: [u64; 3],
    pub lo: Vec3,
    pub hi: Vec3,
    /// Intersects the body surface.
    pub cut: bool,
}

impl Cell {
    pub fn centroid(&self) -> Vec3 {
        [(self.lo[0] + self.hi[0]) * 0.5, (self.lo[1] + self.hi[1]) * 0.5, (self.lo[2] + self.hi[2]) * 0.5]
    }

    pub fn size(&self) -> Vec3 {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    pub fn volume(&self) -> f64 {
        let s = self.size();
        s[0] * s[1] * s[2]
    }

    pub fn diagonal(&self) -> f64 {
        let s = self.size();
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
    }

    pub fn key(&self) -> (u8, [u64; 3]) {
        (self.level, self.ijk)
    }
}

/// A face of an active cell: interior when `neighbour` is set, otherwise a
/// boundary face on `patch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub owner: usize,
    pub neighbour: Option<usize>,
    pub patch: Option<Patch>,
    pub axis: usize,
    /// +1 when the outward normal from `owner` points along +axis.
    pub sign: i8,
    pub center: Vec3,
    pub area: f64,
    /// Corner of the face with the smaller coordinates and its two extents.
    pub lo: Vec3,
    pub hi: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Active(usize),
    Removed,
}

/// Castellated hexahedral mesh with octree refinement.
#[derive(Debug, Clone)]
pub struct HexMesh {
    pub domain: DomainBox,
    pub base_cells: [usize; 3],
    /// Fluid cells, ordered by (level, z, y, x).
    pub cells: Vec<Cell>,
    /// Cells inside the body or in discarded fluid pockets.
    pub removed: Vec<Cell>,
    lookup: HashMap<(u8, [u64; 3]), Slot>,
}

impl HexMesh {
    /// Uniform `counts[0] x counts[1] x counts[2]` background mesh.
    pub fn block_mesh(domain: DomainBox, counts: [usize; 3]) -> Self {
        assert!(counts.iter().all(|&n| n >= 1), "block_mesh needs at least one cell per axis");
        let mut cells = Vec::with_capacity(counts.iter().product());
        for k in 0..counts[2] as u64 {
            for j in 0..counts[1] as u64 {
                for i in 0..counts[0] as u64 {
                    cells.push(make_cell(&domain, counts, 0, [i, j, k], false));
                }
            }
        }
        HexMesh::from_parts(domain, counts, cells, Vec::new())
    }

    pub(crate) fn from_parts(domain: DomainBox, base_cells: [usize; 3], mut cells: Vec<Cell>, mut removed: Vec<Cell>) -> Self {
        let order = |c: &Cell| (c.level, c.ijk[2], c.ijk[1], c.ijk[0]);
        cells.sort_by_key(order);
        removed.sort_by_key(order);
        let mut lookup = HashMap::with_capacity(cells.len() + removed.len());
        for (i, c) in cells.iter().enumerate() {
            lookup.insert(c.key(), Slot::Active(i));
        }
        for c in &removed {
            lookup.insert(c.key(), Slot::Removed);
        }
        HexMesh { domain, base_cells, cells, removed, lookup }
    }

    pub fn max_level(&self) -> u8 {
        self.cells.iter().chain(&self.removed).map(|c| c.level).max().unwrap_or(0)
    }

    /// Base-cell edge lengths.
    pub fn base_size(&self) -> Vec3 {
        let e = self.domain.extent();
        [e[0] / self.base_cells[0] as f64, e[1] / self.base_cells[1] as f64, e[2] / self.base_cells[2] as f64]
    }

    pub(crate) fn slot(&self, level: u8, ijk: [u64; 3]) -> Option<Slot> {
        self.lookup.get(&(level, ijk)).copied()
    }

    /// Leaf at or above `level` that contains the level-`level` position.
    pub(crate) fn covering(&self, level: u8, ijk: [u64; 3]) -> Option<(u8, [u64; 3], Slot)> {
        for lev in (0..=level).rev() {
            let s = level - lev;
            let key = [ijk[0] >> s, ijk[1] >> s, ijk[2] >> s];
            if let Some(slot) = self.slot(lev, key) {
                return Some((lev, key, slot));
            }
        }
        None
    }

    fn dims(&self, level: u8) -> [u64; 3] {
        self.base_cells.map(|n| (n as u64) << level)
    }

    /// Removes active cells by index; they join `removed`.
    pub fn remove_cells(&mut self, indices: &[usize]) {
        let mut drop = vec![false; self.cells.len()];
        for &i in indices {
            drop[i] = true;
        }
        let mut keep = Vec::with_capacity(self.cells.len());
        let mut removed = std::mem::take(&mut self.removed);
        for (c, d) in self.cells.drain(..).zip(drop) {
            if d {
                removed.push(c);
            } else {
                keep.push(c);
            }
        }
        *self = HexMesh::from_parts(self.domain, self.base_cells, keep, removed);
    }

    /// All faces of active cells; interior faces appear once.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            for axis in 0..3 {
                for sign in [-1i8, 1] {
                    self.cell_faces(ci, c, axis, sign, &mut out);
                }
            }
        }
        out
    }

    fn cell_faces(&self, ci: usize, c: &Cell, axis: usize, sign: i8, out: &mut Vec<Face>) {
        let dims = self.dims(c.level);
        let pos = c.ijk[axis] as i64 + sign as i64;
        let face = |owner_cell: &Cell, lo: Vec3, hi: Vec3, neighbour, patch| {
            let _ = owner_cell;
            let mut center = [0.0; 3];
            let mut area = 1.0;
            for a in 0..3 {
                center[a] = 0.5 * (lo[a] + hi[a]);
                if a != axis {
                    area *= hi[a] - lo[a];
                }
            }
            Face { owner: ci, neighbour, patch, axis, sign, center, area, lo, hi }
        };
        let (mut lo, mut hi) = (c.lo, c.hi);
        if sign > 0 {
            lo[axis] = c.hi[axis];
        } else {
            hi[axis] = c.lo[axis];
        }
        if pos < 0 || pos >= dims[axis] as i64 {
            let patch = match (axis, sign) {
                (0, -1) => Patch::Inlet,
                (0, _) => Patch::Outlet,
                _ => Patch::Symmetry,
            };
            out.push(face(c, lo, hi, None, Some(patch)));
            return;
        }
        let mut nijk = c.ijk;
        nijk[axis] = pos as u64;
        match self.covering(c.level, nijk) {
            Some((lev, _, Slot::Active(j))) => {
                if lev < c.level || ci < j {
                    out.push(face(c, lo, hi, Some(j), None));
                }
            }
            Some((_, _, Slot::Removed)) => out.push(face(c, lo, hi, None, Some(Patch::Body))),
            None => self.finer_body_faces(ci, c.level + 1, nijk, axis, sign, out),
        }
    }

    /// Body faces between an active cell and removed descendants of its
    /// refined neighbour `parent` (a position at `level - 1`).
    fn finer_body_faces(&self, ci: usize, level: u8, parent: [u64; 3], axis: usize, sign: i8, out: &mut Vec<Face>) {
        let side = if sign > 0 { 0 } else { 1 };
        for b in 0..2u64 {
            for a in 0..2u64 {
                let mut ijk = [parent[0] * 2, parent[1] * 2, parent[2] * 2];
                let others: Vec<usize> = (0..3).filter(|&x| x != axis).collect();
                ijk[axis] += side;
                ijk[others[0]] += a;
                ijk[others[1]] += b;
                match self.slot(level, ijk) {
                    Some(Slot::Active(_)) => {}
                    Some(Slot::Removed) => {
                        let child = make_cell(&self.domain, self.base_cells, level, ijk, false);
                        let (mut lo, mut hi) = (child.lo, child.hi);
                        if sign > 0 {
                            hi[axis] = child.lo[axis];
                        } else {
                            lo[axis] = child.hi[axis];
                        }
                        let mut center = [0.0; 3];
                        let mut area = 1.0;
                        for x in 0..3 {
                            center[x] = 0.5 * (lo[x] + hi[x]);
                            if x != axis {
                                area *= hi[x] - lo[x];
                            }
                        }
                        out.push(Face { owner: ci, neighbour: None, patch: Some(Patch::Body), axis, sign, center, area, lo, hi });
                    }
                    None => self.finer_body_faces(ci, level + 1, ijk, axis, sign, out),
                }
            }
        }
    }

    /// Face-adjacency lists of active cells.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.cells.len()];
        for f in self.faces() {
            if let Some(n) = f.neighbour {
                adj[f.owner].push(n);
                adj[n].push(f.owner);
            }
        }
        adj
    }

    /// Volumes in units of the finest cell: (fluid, surface, removed, domain).
    /// Surface cells are active cells cut by the body.
    pub fn volume_accounting(&self) -> (u128, u128, u128, u128) {
        let top = self.max_level() as u32;
        let unit = |c: &Cell| 1u128 << (3 * (top - c.level as u32));
        let fluid = self.cells.iter().filter(|c| !c.cut).map(unit).sum();
        let surface = self.cells.iter().filter(|c| c.cut).map(unit).sum();
        let removed = self.removed.iter().map(unit).sum();
        let domain = self.base_cells.iter().map(|&n| n as u128).product::<u128>() << (3 * top);
        (fluid, surface, removed, domain)
    }

    /// Base-resolution solid mask, x fastest: a base cell is solid when at
    /// least half of its volume was removed.
    pub fn base_solid_mask(&self) -> Vec<bool> {
        let [nx, ny, nz] = self.base_cells;
        let top = self.max_level() as u32;
        let mut removed = vec![0u128; nx * ny * nz];
        for c in &self.removed {
            let s = c.level as u32;
            let (i, j, k) = ((c.ijk[0] >> s) as usize, (c.ijk[1] >> s) as usize, (c.ijk[2] >> s) as usize);
            removed[(k * ny + j) * nx + i] += 1u128 << (3 * (top - s));
        }
        let full = 1u128 << (3 * top);
        removed.into_iter().map(|r| 2 * r >= full).collect()
    }

    pub fn patch_counts(&self) -> HashMap<Patch, usize> {
        let mut m = HashMap::new();
        for f in self.faces() {
            if let Some(p) = f.patch {
                *m.entry(p).or_insert(0) += 1;
            }
        }
        m
    }
}

pub(crate) fn make_cell(domain: &DomainBox, base: [usize; 3], level: u8, ijk: [u64; 3], cut: bool) -> Cell {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for a in 0..3 {
        let n = (base[a] as u64) << level;
        let t0 = ijk[a] as f64 / n as f64;
        let t1 = (ijk[a] + 1) as f64 / n as f64;
        lo[a] = domain.min[a] + t0 * (domain.max[a] - domain.min[a]);
        hi[a] = if ijk[a] + 1 == n { domain.max[a] } else { domain.min[a] + t1 * (domain.max[a] - domain.min[a]) };
    }
    Cell { level, ijk, lo, hi, cut }
}
