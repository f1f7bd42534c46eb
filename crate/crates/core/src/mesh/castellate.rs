use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::geometry::vec3::Vec3;
use crate::geometry::TriMesh;

use super::hex::{make_cell, Cell, HexMesh};
use super::inside::InsideClassifier;
use super::sat::triangle_box_overlap;
use super::{FailureCode, MeshFailure, MeshStage};

/// Fewest base cells the body must cover for castellation to proceed.
pub const MIN_INSIDE_BASE_CELLS: usize = 8;

type Key = (u8, [u64; 3]);

struct Surface<'a> {
    tris: Vec<[Vec3; 3]>,
    bins: HashMap<usize, Vec<u32>>,
    mesh: &'a HexMesh,
}

impl<'a> Surface<'a> {
    fn new(body: &TriMesh, mesh: &'a HexMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..body.triangles.len()).map(|t| body.triangle(t)).collect();
        let [nx, ny, _] = mesh.base_cells;
        let h = mesh.base_size();
        let idx = |a: usize, v: f64, n: usize| (((v - mesh.domain.min[a]) / h[a]).floor().max(0.0) as usize).min(n - 1);
        let mut bins: HashMap<usize, Vec<u32>> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            let mut lo = [usize::MAX; 3];
            let mut hi = [0; 3];
            for a in 0..3 {
                let n = mesh.base_cells[a];
                for v in tri {
                    // Widen by one cell so triangles on a cell boundary reach both sides.
                    let f = (v[a] - mesh.domain.min[a]) / h[a];
                    lo[a] = lo[a].min(idx(a, v[a], n).saturating_sub(usize::from(f.fract() == 0.0)));
                    hi[a] = hi[a].max(idx(a, v[a], n));
                }
            }
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        bins.entry((k * ny + j) * nx + i).or_default().push(t as u32);
                    }
                }
            }
        }
        Surface { tris, bins, mesh }
    }

    fn cuts(&self, level: u8, ijk: [u64; 3]) -> bool {
        let [nx, ny, _] = self.mesh.base_cells;
        let b = [ijk[0] >> level, ijk[1] >> level, ijk[2] >> level].map(|v| v as usize);
        let Some(list) = self.bins.get(&((b[2] * ny + b[1]) * nx + b[0])) else {
            return false;
        };
        let c = make_cell(&self.mesh.domain, self.mesh.base_cells, level, ijk, false);
        list.iter().any(|&t| triangle_box_overlap(&self.tris[t as usize], c.lo, c.hi))
    }
}

fn children(key: Key) -> [Key; 8] {
    let (l, [i, j, k]) = key;
    let mut out = [(0, [0; 3]); 8];
    for (n, slot) in out.iter_mut().enumerate() {
        let n = n as u64;
        *slot = (l + 1, [2 * i + (n & 1), 2 * j + ((n >> 1) & 1), 2 * k + ((n >> 2) & 1)]);
    }
    out
}

fn split(leaves: &mut BTreeMap<Key, bool>, key: Key, surface: &Surface) {
    leaves.remove(&key);
    let kids = children(key);
    let cuts: Vec<bool> = kids.par_iter().map(|&(l, ijk)| surface.cuts(l, ijk)).collect();
    for (kid, cut) in kids.into_iter().zip(cuts) {
        leaves.insert(kid, cut);
    }
}

fn covering(leaves: &BTreeMap<Key, bool>, level: u8, ijk: [u64; 3]) -> Option<Key> {
    (0..=level).rev().find_map(|lev| {
        let s = level - lev;
        let key = (lev, [ijk[0] >> s, ijk[1] >> s, ijk[2] >> s]);
        leaves.contains_key(&key).then_some(key)
    })
}

/// Splits leaves until face-adjacent leaves differ by at most one level.
fn balance(leaves: &mut BTreeMap<Key, bool>, base: [usize; 3], surface: &Surface) {
    loop {
        let mut coarse = BTreeSet::new();
        for &(l, ijk) in leaves.keys() {
            if l < 2 {
                continue;
            }
            for axis in 0..3 {
                for d in [-1i64, 1] {
                    let p = ijk[axis] as i64 + d;
                    if p < 0 || p >= ((base[axis] as u64) << l) as i64 {
                        continue;
                    }
                    let mut n = ijk;
                    n[axis] = p as u64;
                    if let Some(key) = covering(leaves, l, n) {
                        if key.0 + 1 < l {
                            coarse.insert(key);
                        }
                    }
                }
            }
        }
        if coarse.is_empty() {
            return;
        }
        for key in coarse {
            split(leaves, key, surface);
        }
    }
}

fn failure(code: FailureCode, count: usize, detail: String) -> MeshFailure {
    MeshFailure { stage: MeshStage::Castellation, code, count, detail }
}

/// Refines cells cut by `body` up to `levels` times, balances to 2:1,
/// removes cells whose centroid is inside the body and keeps the connected
/// fluid region with the most cells.
pub fn castellate(background: &HexMesh, body: &TriMesh, levels: u32) -> Result<HexMesh, MeshFailure> {
    if body.triangles.is_empty() {
        return Ok(background.clone());
    }
    let classifier = InsideClassifier::new(body).map_err(|e| failure(FailureCode::NonWatertightBody, 0, e.to_string()))?;
    if !background.domain.aabb().strictly_contains(&body.bounding_box()) {
        return Err(failure(FailureCode::BodyOutsideDomain, 0, "body bounding box leaves the domain".into()));
    }
    let base: Vec<&Cell> = background.cells.iter().collect();
    let inside_base = base.par_iter().filter(|c| classifier.contains(c.centroid())).count();
    if inside_base < MIN_INSIDE_BASE_CELLS {
        return Err(failure(
            FailureCode::UnderResolved,
            inside_base,
            format!("body covers {inside_base} base cells, need {MIN_INSIDE_BASE_CELLS}"),
        ));
    }

    let surface = Surface::new(body, background);
    let keys: Vec<Key> = background.cells.iter().map(Cell::key).collect();
    let cuts: Vec<bool> = keys.par_iter().map(|&(l, ijk)| surface.cuts(l, ijk)).collect();
    let mut leaves: BTreeMap<Key, bool> = keys.into_iter().zip(cuts).collect();
    let top = background.max_level();
    for lev in top..top + levels as u8 {
        let todo: Vec<Key> = leaves.iter().filter(|(k, &cut)| k.0 == lev && cut).map(|(k, _)| *k).collect();
        for key in todo {
            split(&mut leaves, key, &surface);
        }
    }
    balance(&mut leaves, background.base_cells, &surface);

    let cells: Vec<Cell> = leaves
        .iter()
        .map(|(&(l, ijk), &cut)| make_cell(&background.domain, background.base_cells, l, ijk, cut))
        .collect();
    let inside: Vec<bool> = cells.par_iter().map(|c| classifier.contains(c.centroid())).collect();
    let (mut active, mut removed) = (Vec::new(), Vec::new());
    for (c, ins) in cells.into_iter().zip(inside) {
        if ins {
            removed.push(c);
        } else {
            active.push(c);
        }
    }
    let mut mesh = HexMesh::from_parts(background.domain, background.base_cells, active, removed);
    keep_inlet_region(&mut mesh)?;
    Ok(mesh)
}

/// Connected components of active cells, labelled in cell order.
pub fn fluid_regions(mesh: &HexMesh) -> Vec<usize> {
    let adj = mesh.adjacency();
    let mut label = vec![usize::MAX; mesh.cells.len()];
    let mut next = 0;
    for s in 0..mesh.cells.len() {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        let mut stack = vec![s];
        while let Some(c) = stack.pop() {
            for &n in &adj[c] {
                if label[n] == usize::MAX {
                    label[n] = next;
                    stack.push(n);
                }
            }
        }
        next += 1;
    }
    label
}

fn keep_inlet_region(mesh: &mut HexMesh) -> Result<(), MeshFailure> {
    let label = fluid_regions(mesh);
    let regions = label.iter().max().map_or(0, |m| m + 1);
    if regions <= 1 {
        return Ok(());
    }
    let mut size = vec![0usize; regions];
    for &l in &label {
        size[l] += 1;
    }
    let big = *size.iter().max().expect("nonempty");
    let winners: Vec<usize> = (0..regions).filter(|&r| size[r] == big).collect();
    if winners.len() > 1 {
        return Err(failure(
            FailureCode::AmbiguousFluidRegion,
            regions,
            format!("{} fluid regions tie for largest", winners.len()),
        ));
    }
    let keep = winners[0];
    let touches_inlet = mesh.cells.iter().zip(&label).any(|(c, &l)| l == keep && c.ijk[0] == 0);
    if !touches_inlet {
        return Err(failure(FailureCode::AmbiguousFluidRegion, regions, "largest fluid region misses the inlet".into()));
    }
    let drop: Vec<usize> = (0..label.len()).filter(|&i| label[i] != keep).collect();
    log::debug!("discarding {} cells in {} enclosed fluid pockets", drop.len(), regions - 1);
    mesh.remove_cells(&drop);
    Ok(())
}
