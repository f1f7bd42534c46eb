use std::collections::HashMap;
use std::fmt::Write as _;

use super::hex::{Face, HexMesh};

/// Legacy ASCII VTK unstructured grid: hexahedra for fluid cells followed by
/// quads for every boundary face, with `patch` (0 for volume cells, else
/// [`super::Patch::id`]), `level` and `cut` cell data.
pub fn write_vtk(mesh: &HexMesh) -> String {
    let faces: Vec<Face> = mesh.faces().into_iter().filter(|f| f.patch.is_some()).collect();
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut id = |p: [f64; 3]| -> usize {
        let key = p.map(f64::to_bits);
        *index.entry(key).or_insert_with(|| {
            points.push(p);
            points.len() - 1
        })
    };
    let mut hexes = Vec::with_capacity(mesh.cells.len());
    for c in &mesh.cells {
        let (l, h) = (c.lo, c.hi);
        hexes.push([
            id([l[0], l[1], l[2]]),
            id([h[0], l[1], l[2]]),
            id([h[0], h[1], l[2]]),
            id([l[0], h[1], l[2]]),
            id([l[0], l[1], h[2]]),
            id([h[0], l[1], h[2]]),
            id([h[0], h[1], h[2]]),
            id([l[0], h[1], h[2]]),
        ]);
    }
    let mut quads = Vec::with_capacity(faces.len());
    for f in &faces {
        let (u, v) = match f.axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        let corner = |a: f64, b: f64| {
            let mut p = f.lo;
            p[u] = a;
            p[v] = b;
            p
        };
        let mut q = [
            id(corner(f.lo[u], f.lo[v])),
            id(corner(f.hi[u], f.lo[v])),
            id(corner(f.hi[u], f.hi[v])),
            id(corner(f.lo[u], f.hi[v])),
        ];
        if f.sign < 0 {
            q.reverse();
        }
        quads.push(q);
    }

    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nanvil castellated mesh (mm)\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let n = hexes.len() + quads.len();
    let _ = writeln!(s, "CELLS {} {}", n, hexes.len() * 9 + quads.len() * 5);
    for h in &hexes {
        let _ = writeln!(s, "8 {} {} {} {} {} {} {} {}", h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7]);
    }
    for q in &quads {
        let _ = writeln!(s, "4 {} {} {} {}", q[0], q[1], q[2], q[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in &hexes {
        s.push_str("12\n");
    }
    for _ in &quads {
        s.push_str("9\n");
    }
    let _ = writeln!(s, "CELL_DATA {n}\nSCALARS patch int 1\nLOOKUP_TABLE default");
    for _ in &hexes {
        s.push_str("0\n");
    }
    for f in &faces {
        let _ = writeln!(s, "{}", f.patch.map_or(0, |p| p.id()));
    }
    s.push_str("SCALARS level int 1\nLOOKUP_TABLE default\n");
    for c in &mesh.cells {
        let _ = writeln!(s, "{}", c.level);
    }
    for f in &faces {
        let _ = writeln!(s, "{}", mesh.cells[f.owner].level);
    }
    s.push_str("SCALARS cut int 1\nLOOKUP_TABLE default\n");
    for c in &mesh.cells {
        let _ = writeln!(s, "{}", u8::from(c.cut));
    }
    for _ in &faces {
        s.push_str("0\n");
    }
    s
}
