use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverBackend;
use crate::mesh::HexMesh;

use super::conditions::FlowConditions;
use super::field::FlowField;
use super::FlowError;

pub const Q: usize = 19;

pub const C: [[i32; 3]; Q] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
];

const W0: f64 = 1.0 / 3.0;
const W1: f64 = 1.0 / 18.0;
const W2: f64 = 1.0 / 36.0;

pub const W: [f64; Q] = [W0, W1, W1, W1, W1, W1, W1, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2, W2];

pub const OPP: [usize; Q] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17];

/// Lattice speed of sound squared.
pub const CS2: f64 = 1.0 / 3.0;

/// Stable relaxation-time window.
pub const TAU_RANGE: (f64, f64) = (0.51, 1.9);

/// Largest inlet speed in lattice units (lattice Mach 0.1).
pub const MAX_LATTICE_VELOCITY: f64 = 0.1 * 0.577_350_269_189_625_8;

/// Lattice Mach number treated as divergence.
pub const DIVERGENCE_MACH: f64 = 0.3;

fn reflect(q: usize, axis: usize) -> usize {
    let mut c = C[q];
    c[axis] = -c[axis];
    C.iter().position(|&d| d == c).expect("lattice is closed under reflection")
}

#[inline]
pub fn equilibrium(q: usize, rho: f64, u: [f64; 3]) -> f64 {
    let c = C[q];
    let cu = c[0] as f64 * u[0] + c[1] as f64 * u[1] + c[2] as f64 * u[2];
    let uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    W[q] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * uu)
}

/// Uniform voxel grid; `solid` is indexed x fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    /// m
    pub dx: f64,
    /// Centre of voxel (0, 0, 0), m.
    pub origin: [f64; 3],
    pub solid: Vec<bool>,
}

impl VoxelGrid {
    pub fn empty(dims: [usize; 3], dx: f64) -> Self {
        VoxelGrid { dims, dx, origin: [0.5 * dx; 3], solid: vec![false; dims.iter().product()] }
    }

    /// Base-level voxels of a castellated mesh (lengths in mm).
    pub fn from_mesh(mesh: &HexMesh) -> Self {
        let h = mesh.base_size();
        let dx = h.iter().fold(0.0f64, |a, &b| a.max(b)) / 1000.0;
        let origin = [0, 1, 2].map(|a| (mesh.domain.min[a] + 0.5 * h[a]) / 1000.0);
        VoxelGrid { dims: mesh.base_cells, dx, origin, solid: mesh.base_solid_mask() }
    }

    pub fn len(&self) -> usize {
        self.solid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solid.is_empty()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    pub fn coords(&self, n: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [n % nx, (n / nx) % ny, n / (nx * ny)]
    }

    /// Reflection y -> -y about the grid centre.
    pub fn mirrored_y(&self) -> Self {
        let mut out = self.clone();
        for n in 0..self.len() {
            let [x, y, z] = self.coords(n);
            out.solid[self.index(x, self.dims[1] - 1 - y, z)] = self.solid[n];
        }
        out
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|&&s| s).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamBoundary {
    /// Velocity inlet on the low face, pressure outlet on the high face.
    InletOutlet,
    Periodic,
    /// Specular reflection (free slip).
    Symmetry,
    /// Half-way bounce-back (no slip).
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub axes: [StreamBoundary; 3],
    /// Physical body force, m/s^2.
    pub body_force: [f64; 3],
}

impl Boundaries {
    /// Inlet on -x, outlet on +x, symmetry elsewhere.
    pub fn external_flow() -> Self {
        Boundaries {
            axes: [StreamBoundary::InletOutlet, StreamBoundary::Symmetry, StreamBoundary::Symmetry],
            body_force: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbmOptions {
    pub max_steps: usize,
    /// Relative change of the monitored quantity over one window.
    pub residual_tol: f64,
    /// Requested inlet speed in lattice units.
    pub lattice_velocity: f64,
    pub window: usize,
}

impl LbmOptions {
    pub fn new(max_steps: usize, residual_tol: f64) -> Self {
        LbmOptions { max_steps, residual_tol, lattice_velocity: 0.05, window: 100 }
    }

    pub fn from_backend(b: &SolverBackend) -> Option<Self> {
        match *b {
            SolverBackend::Internal { max_steps, residual_tol, lattice_velocity } => {
                Some(LbmOptions { max_steps, residual_tol, lattice_velocity, window: 100 })
            }
            SolverBackend::ExternalCommand { .. } => None,
        }
    }
}

/// Conversion between lattice and physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    /// m
    pub dx: f64,
    /// s
    pub dt: f64,
    /// kg/m^3
    pub density: f64,
    pub tau: f64,
    pub lattice_velocity: f64,
}

impl UnitScale {
    /// Picks the lattice velocity closest to the requested one that keeps
    /// the relaxation time inside [`TAU_RANGE`].
    pub fn choose(cond: &FlowConditions, dx: f64, requested: f64) -> Result<Self, FlowError> {
        let tau_of = |ul: f64| 3.0 * cond.kinematic_viscosity * ul / (cond.inlet_speed * dx) + 0.5;
        let ul_for = |tau: f64| (tau - 0.5) / 3.0 * cond.inlet_speed * dx / cond.kinematic_viscosity;
        let mut ul = requested.min(MAX_LATTICE_VELOCITY);
        let tau = tau_of(ul);
        if tau < TAU_RANGE.0 {
            ul = ul_for(TAU_RANGE.0);
        } else if tau > TAU_RANGE.1 {
            ul = ul_for(TAU_RANGE.1);
        }
        let tau = tau_of(ul);
        if !(ul > 0.0 && ul <= MAX_LATTICE_VELOCITY * (1.0 + 1e-12)) || !(TAU_RANGE.0 - 1e-9..=TAU_RANGE.1 + 1e-9).contains(&tau) {
            return Err(FlowError::StabilityBound { tau: tau_of(requested), reynolds_per_cell: cond.reynolds(dx) });
        }
        Ok(UnitScale { dx, dt: ul * dx / cond.inlet_speed, density: cond.density, tau, lattice_velocity: ul })
    }

    pub fn velocity(&self) -> f64 {
        self.dx / self.dt
    }

    /// Lattice momentum-exchange force to newtons.
    pub fn force(&self) -> f64 {
        self.density * self.dx.powi(4) / (self.dt * self.dt)
    }

    /// Gauge pressure in Pa for lattice density `rho`.
    pub fn pressure(&self, rho: f64) -> f64 {
        (rho - 1.0) * CS2 * self.density * self.velocity().powi(2)
    }
}

const INLET: u32 = u32::MAX;
const OUTLET: u32 = u32::MAX - 1;
const BOUNCE: u32 = u32::MAX - 2;
const WALL: u32 = u32::MAX - 3;

/// Pull-streaming source for every (node, direction) pair.
pub(crate) fn stream_sources(grid: &VoxelGrid, bc: &Boundaries) -> Vec<u32> {
    let [nx, ny, nz] = grid.dims;
    let dims = [nx as i64, ny as i64, nz as i64];
    let mut src = vec![WALL; grid.len() * Q];
    for n in 0..grid.len() {
        if grid.solid[n] {
            continue;
        }
        let p = grid.coords(n).map(|v| v as i64);
        'dir: for q in 0..Q {
            let mut qs = q;
            let mut s = [p[0] - C[q][0] as i64, p[1] - C[q][1] as i64, p[2] - C[q][2] as i64];
            for axis in [1, 2, 0] {
                if s[axis] >= 0 && s[axis] < dims[axis] {
                    continue;
                }
                match bc.axes[axis] {
                    StreamBoundary::Periodic => s[axis] = s[axis].rem_euclid(dims[axis]),
                    StreamBoundary::Symmetry => {
                        s[axis] = p[axis];
                        qs = reflect(qs, axis);
                    }
                    StreamBoundary::Wall => {
                        src[n * Q + q] = WALL;
                        continue 'dir;
                    }
                    StreamBoundary::InletOutlet => {
                        src[n * Q + q] = if s[axis] < 0 { INLET } else { OUTLET };
                        continue 'dir;
                    }
                }
            }
            let m = grid.index(s[0] as usize, s[1] as usize, s[2] as usize);
            src[n * Q + q] = if grid.solid[m] { BOUNCE } else { (m * Q + qs) as u32 };
        }
    }
    src
}

/// Fluid-to-solid links (node, direction towards the solid).
pub(crate) fn body_links(grid: &VoxelGrid, src: &[u32]) -> Vec<(u32, u8)> {
    let mut links = Vec::new();
    for n in 0..grid.len() {
        for q in 1..Q {
            if !grid.solid[n] && src[n * Q + q] == BOUNCE {
                links.push((n as u32, OPP[q] as u8));
            }
        }
    }
    links
}

/// Momentum exchange on the body, lattice units.
pub(crate) fn link_force(f: &[f64], links: &[(u32, u8)]) -> [f64; 3] {
    let mut force = [0.0; 3];
    for &(n, q) in links {
        let v = 2.0 * f[n as usize * Q + q as usize];
        for (a, fa) in force.iter_mut().enumerate() {
            *fa += v * C[q as usize][a] as f64;
        }
    }
    force
}

/// Net population mass through the open faces for one streaming step:
/// (in through inlet, out through inlet, in through outlet, out through outlet).
pub(crate) fn open_fluxes(grid: &VoxelGrid, src: &[u32], f: &[f64], rho: &[f64], u: &[[f64; 3]], u_in: f64) -> [f64; 4] {
    let mut pulled = vec![false; f.len()];
    let mut flux = [0.0; 4];
    for n in 0..grid.len() {
        if grid.solid[n] {
            continue;
        }
        for q in 0..Q {
            match src[n * Q + q] {
                INLET => flux[0] += equilibrium(q, rho[n], [u_in, 0.0, 0.0]),
                OUTLET => flux[2] += equilibrium(q, 1.0, u[n]),
                BOUNCE | WALL => pulled[n * Q + OPP[q]] = true,
                s => pulled[s as usize] = true,
            }
        }
    }
    for n in 0..grid.len() {
        if grid.solid[n] {
            continue;
        }
        let x = grid.coords(n)[0];
        for q in 0..Q {
            if !pulled[n * Q + q] {
                let slot = if C[q][0] < 0 && x == 0 { 1 } else { 3 };
                flux[slot] += f[n * Q + q];
            }
        }
    }
    flux
}

/// D3Q19 BGK state.
pub struct Lattice {
    grid: VoxelGrid,
    bc: Boundaries,
    scale: UnitScale,
    src: Vec<u32>,
    links: Vec<(u32, u8)>,
    f: Vec<f64>,
    g: Vec<f64>,
    rho: Vec<f64>,
    u: Vec<[f64; 3]>,
    force_lattice: [f64; 3],
    steps: usize,
    filtered: Vec<f64>,
    damping: (f64, f64),
}

impl Lattice {
    pub fn new(grid: VoxelGrid, bc: Boundaries, scale: UnitScale) -> Self {
        let src = stream_sources(&grid, &bc);
        let links = body_links(&grid, &src);
        let n = grid.len();
        let ul = if bc.axes[0] == StreamBoundary::InletOutlet { scale.lattice_velocity } else { 0.0 };
        let mut f = vec![0.0; n * Q];
        let mut u = vec![[0.0; 3]; n];
        for i in 0..n {
            if !grid.solid[i] {
                u[i] = [ul, 0.0, 0.0];
                for q in 0..Q {
                    f[i * Q + q] = equilibrium(q, 1.0, u[i]);
                }
            }
        }
        let force_lattice = bc.body_force.map(|a| a * scale.dt * scale.dt / scale.dx);
        let damping = Self::default_damping(grid.dims);
        Lattice {
            g: f.clone(),
            filtered: f.clone(),
            f,
            rho: vec![1.0; n],
            u,
            grid,
            bc,
            scale,
            src,
            links,
            force_lattice,
            steps: 0,
            damping,
        }
    }

    /// Selective frequency damping tuned to the slowest acoustic mode of a
    /// box with one reflecting and one open end (period 4 L / c_s).
    fn default_damping(dims: [usize; 3]) -> (f64, f64) {
        let l = *dims.iter().max().expect("three axes") as f64;
        let omega = 2.0 * std::f64::consts::PI * CS2.sqrt() / (4.0 * l);
        (omega, 2.0 / omega)
    }

    /// Relaxation rate `chi` towards a low-pass copy of the populations with
    /// filter width `width` steps; `chi = 0` disables it.
    pub fn set_damping(&mut self, chi: f64, width: f64) {
        self.damping = (chi, width.max(1.0));
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn scale(&self) -> &UnitScale {
        &self.scale
    }

    pub fn step(&mut self) {
        let plane = self.grid.dims[0] * self.grid.dims[1];
        let (f, src, solid) = (&self.f, &self.src, &self.grid.solid);
        let tau = self.scale.tau;
        let u_in = self.scale.lattice_velocity;
        let force = self.force_lattice;
        let forced = force != [0.0; 3];
        let (chi, width) = self.damping;
        let damped = chi > 0.0;
        self.g
            .par_chunks_mut(plane * Q)
            .zip(self.filtered.par_chunks_mut(plane * Q))
            .zip(self.rho.par_chunks_mut(plane))
            .zip(self.u.par_chunks_mut(plane))
            .enumerate()
            .for_each(|(z, (((g, fb), rho), u))| {
                for l in 0..plane {
                    let n = z * plane + l;
                    if solid[n] {
                        continue;
                    }
                    let mut pop = [0.0; Q];
                    for q in 0..Q {
                        pop[q] = match src[n * Q + q] {
                            INLET => equilibrium(q, rho[l], [u_in, 0.0, 0.0]),
                            OUTLET => equilibrium(q, 1.0, u[l]),
                            BOUNCE | WALL => f[n * Q + OPP[q]],
                            s => f[s as usize],
                        };
                    }
                    let mut r = 0.0;
                    let mut m = [0.0; 3];
                    for q in 0..Q {
                        r += pop[q];
                        for a in 0..3 {
                            m[a] += pop[q] * C[q][a] as f64;
                        }
                    }
                    let v = [0, 1, 2].map(|a| (m[a] + 0.5 * force[a]) / r);
                    rho[l] = r;
                    u[l] = v;
                    let out = &mut g[l * Q..(l + 1) * Q];
                    let pref = 1.0 - 0.5 / tau;
                    for q in 0..Q {
                        let mut post = pop[q] - (pop[q] - equilibrium(q, r, v)) / tau;
                        if forced {
                            let c = C[q].map(|x| x as f64);
                            let cu = c[0] * v[0] + c[1] * v[1] + c[2] * v[2];
                            let mut s = 0.0;
                            for a in 0..3 {
                                s += (3.0 * (c[a] - v[a]) + 9.0 * cu * c[a]) * force[a];
                            }
                            post += pref * W[q] * s;
                        }
                        if damped {
                            let a = fb[l * Q + q];
                            post -= chi * (post - a);
                            fb[l * Q + q] = a + (post - a) / width;
                        }
                        out[q] = post;
                    }
                }
            });
        std::mem::swap(&mut self.f, &mut self.g);
        self.steps += 1;
    }

    /// Momentum-exchange force on the body in lattice units.
    pub fn body_force_lattice(&self) -> [f64; 3] {
        link_force(&self.f, &self.links)
    }

    fn monitor(&self) -> f64 {
        if self.links.is_empty() {
            // Total x-momentum when there is no body to load.
            self.rho.iter().zip(&self.u).map(|(r, v)| r * v[0]).sum()
        } else {
            self.body_force_lattice()[0]
        }
    }

    fn check(&self, step: usize) -> Result<(), FlowError> {
        let limit = DIVERGENCE_MACH * DIVERGENCE_MACH * CS2;
        for (n, (r, v)) in self.rho.iter().zip(&self.u).enumerate() {
            if self.grid.solid[n] {
                continue;
            }
            if !r.is_finite() || v.iter().any(|x| !x.is_finite()) {
                return Err(FlowError::Diverged { step, reason: "non-finite state".into() });
            }
            if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] > limit {
                return Err(FlowError::Diverged { step, reason: format!("lattice Mach above {DIVERGENCE_MACH}") });
            }
        }
        Ok(())
    }

    /// Steps until the monitored quantity changes by less than `tol`
    /// (relative) over one window.
    pub fn run(&mut self, opts: &LbmOptions) -> Result<Vec<f64>, FlowError> {
        let window = opts.window.max(1);
        let mut prev = self.monitor();
        let mut residuals = Vec::new();
        let mut steps = 0;
        while steps < opts.max_steps {
            let chunk = window.min(opts.max_steps - steps);
            for _ in 0..chunk {
                self.step();
            }
            steps += chunk;
            self.check(steps)?;
            let now = self.monitor();
            let res = (now - prev).abs() / now.abs().max(1e-300);
            let res = if now == prev { 0.0 } else { res };
            residuals.push(res);
            prev = now;
            if chunk == window && res < opts.residual_tol {
                debug!("lattice converged after {steps} steps, residual {res:e}");
                return Ok(residuals);
            }
        }
        Err(FlowError::NotConverged { steps, residual: residuals.last().copied().unwrap_or(f64::INFINITY) })
    }

    pub fn into_field(self, residuals: Vec<f64>) -> FlowField {
        let velocity = self.scale.velocity();
        let flux = if self.bc.axes[0] == StreamBoundary::InletOutlet {
            open_fluxes(&self.grid, &self.src, &self.f, &self.rho, &self.u, self.scale.lattice_velocity)
        } else {
            [0.0; 4]
        };
        let solid = &self.grid.solid;
        let vel = self.u.iter().zip(solid).map(|(v, &s)| if s { [0.0; 3] } else { v.map(|x| x * velocity) }).collect();
        let p = self.rho.iter().zip(solid).map(|(&r, &s)| if s { 0.0 } else { self.scale.pressure(r) }).collect();
        FlowField {
            grid: self.grid,
            boundaries: self.bc,
            scale: self.scale,
            velocity: vel,
            pressure: p,
            populations: self.f,
            residuals,
            open_flux: flux,
            steps: self.steps,
        }
    }
}

/// Runs the lattice solver to convergence.
pub fn lbm_solve(
    grid: &VoxelGrid,
    cond: &FlowConditions,
    bc: Boundaries,
    opts: &LbmOptions,
) -> Result<FlowField, FlowError> {
    let scale = UnitScale::choose(cond, grid.dx, opts.lattice_velocity)?;
    debug!(
        "lattice {:?}, tau {:.4}, lattice velocity {:.4}, dt {:e} s",
        grid.dims, scale.tau, scale.lattice_velocity, scale.dt
    );
    let mut lat = Lattice::new(grid.clone(), bc, scale);
    let residuals = lat.run(opts)?;
    Ok(lat.into_field(residuals))
}
