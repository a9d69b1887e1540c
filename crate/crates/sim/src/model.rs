//! Object state, initial placement and time stepping.

use rand::Rng;

use voxseg_core::{Dims, Spacing};

use crate::error::{Error, Result};
use crate::physics::{add, adhesive_disp, boundary_disp, norm, repulsive_disp, scale, sub, Shell, Vec3};
use crate::rng::{keyed, unit_vector, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct SimObject {
    pub id: u64,
    pub parent_id: Option<u64>,
    /// Physical centre.
    pub x: Vec3,
    pub r: f64,
    /// Cycle progress in `[0, 1)`.
    pub phase: f64,
    pub cycle_length: u32,
    pub appearance_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub n_initial: usize,
    pub n_max: usize,
    pub w_adh: f64,
    pub w_rep: f64,
    pub w_bdr: f64,
    pub shell: Shell,
    pub frames: u32,
    pub dims: Dims,
    pub spacing: Spacing,
    /// Nucleus radii are drawn uniformly from this physical range.
    pub radius_range: (f64, f64),
    /// Cycle lengths in frames, drawn uniformly (inclusive).
    pub cycle_range: (u32, u32),
    /// Minimum surface gap requested at initial placement.
    pub min_gap: f64,
    /// Physics-only steps run before the first frame.
    pub relax_steps: u32,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n_initial: 50,
            n_max: 100,
            w_adh: 0.52,
            w_rep: 1.0,
            w_bdr: 3.0,
            shell: Shell { center: [64.0, 64.0, 40.0], r_inner: 16.0, r_outer: 32.0, steepness: 1.0 },
            frames: 1,
            dims: [128, 128, 32],
            spacing: [1.0, 1.0, 2.5],
            radius_range: (4.0, 5.0),
            cycle_range: (40, 80),
            min_gap: 3.0,
            relax_steps: 50,
            seed: 1,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let s = &self.shell;
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(s.r_inner >= 0.0 && s.r_inner < s.r_outer && s.steepness > 0.0) {
            return bad("shell needs 0 <= r_inner < r_outer and steepness > 0");
        }
        if !(self.w_adh >= 0.0 && self.w_rep >= 0.0 && self.w_bdr >= 0.0) {
            return bad("weights must be >= 0");
        }
        let (lo, hi) = self.radius_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("radius range must satisfy 0 < lo <= hi");
        }
        if !(self.cycle_range.0 >= 1 && self.cycle_range.0 <= self.cycle_range.1) {
            return bad("cycle range must satisfy 1 <= lo <= hi");
        }
        if self.n_max < self.n_initial {
            return bad("n_max must be >= n_initial");
        }
        if self.dims.contains(&0) || self.spacing.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("image dims and spacing must be positive");
        }
        if !(self.min_gap.is_finite() && self.min_gap >= 0.0) {
            return bad("min_gap must be >= 0");
        }
        Ok(())
    }
}

/// Objects sorted by id plus the next free id.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub objects: Vec<SimObject>,
    pub next_id: u64,
}

impl SimState {
    pub fn empty() -> Self {
        Self { objects: Vec::new(), next_id: 1 }
    }
}

fn draw_cycle<R: Rng>(rng: &mut R, p: &SimParams) -> u32 {
    rng.gen_range(p.cycle_range.0..=p.cycle_range.1)
}

/// Random sequential placement inside the shell. Each object takes the first
/// candidate keeping `min_gap` to every earlier one, else the best of 500.
pub fn init_state(p: &SimParams) -> Result<SimState> {
    p.validate()?;
    let s = &p.shell;
    let mut objects: Vec<SimObject> = Vec::with_capacity(p.n_initial);
    for k in 0..p.n_initial {
        let id = k as u64 + 1;
        let mut rng = keyed(p.seed, 0, id, Purpose::Init);
        let r = rng.gen_range(p.radius_range.0..=p.radius_range.1);
        let mut best = ([0.0; 3], f64::NEG_INFINITY);
        for _ in 0..500 {
            let u = unit_vector(&mut rng);
            let rho = rng.gen_range(s.r_inner.powi(3)..=s.r_outer.powi(3)).cbrt();
            let x = add(s.center, scale(u, rho));
            let slack =
                objects.iter().map(|o| norm(sub(x, o.x)) - o.r - r - p.min_gap).fold(f64::INFINITY, f64::min);
            if slack > best.1 {
                best = (x, slack);
            }
            if slack >= 0.0 {
                break;
            }
        }
        objects.push(SimObject {
            id,
            parent_id: None,
            x: best.0,
            r,
            phase: rng.gen_range(0.0..1.0),
            cycle_length: draw_cycle(&mut rng, p),
            appearance_seed: rng.gen(),
        });
    }
    Ok(SimState { objects, next_id: p.n_initial as u64 + 1 })
}

fn pair_key(a: u64, b: u64) -> u64 {
    (a << 32) ^ b
}

/// Total displacement of object `i`: weighted boundary term plus the
/// weighted pairwise repulsion and adhesion from every other object.
pub fn total_displacement(objects: &[SimObject], i: usize, p: &SimParams, key: u64) -> Vec3 {
    let oi = &objects[i];
    let mut tie_rng = keyed(p.seed, key, oi.id, Purpose::Boundary);
    let mut acc = scale(boundary_disp(oi.x, &p.shell, unit_vector(&mut tie_rng)), p.w_bdr);
    for (j, oj) in objects.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = sub(oj.x, oi.x);
        let r_n = oi.r + oj.r;
        let r_m = 2.0 * r_n;
        let tie = if norm(d) == 0.0 {
            let (lo, hi) = if oi.id < oj.id { (oi.id, oj.id) } else { (oj.id, oi.id) };
            let u = unit_vector(&mut keyed(p.seed, key, pair_key(lo, hi), Purpose::Tie));
            if oi.id == lo {
                u
            } else {
                scale(u, -1.0)
            }
        } else {
            [0.0; 3]
        };
        acc = add(acc, scale(repulsive_disp(d, r_n, r_m, tie), p.w_rep));
        acc = add(acc, scale(adhesive_disp(d, r_m), p.w_adh));
    }
    acc
}

fn displace(objects: &mut [SimObject], p: &SimParams, key: u64) {
    let moves: Vec<Vec3> = (0..objects.len()).map(|i| total_displacement(objects, i, p, key)).collect();
    for (o, m) in objects.iter_mut().zip(moves) {
        o.x = add(o.x, m);
    }
}

/// Physics-only steps; phases and lineage stay untouched.
pub fn relax(state: &SimState, p: &SimParams, steps: u32) -> SimState {
    let mut out = state.clone();
    for k in 0..steps {
        displace(&mut out.objects, p, (1u64 << 40) + u64::from(k));
    }
    out
}

/// Advances one frame. Displacements use the previous positions for every
/// object; afterwards each phase advances by `1 / cycle_length` and a wrap
/// divides the object unless the population is already at `n_max`.
pub fn step_simulation(state: &SimState, p: &SimParams, frame: u32) -> SimState {
    let key = u64::from(frame);
    let mut moved = state.objects.clone();
    displace(&mut moved, p, key);

    let mut population = moved.len();
    let mut next_id = state.next_id;
    let mut kept = Vec::with_capacity(moved.len());
    let mut born = Vec::new();
    for mut o in moved {
        o.phase += 1.0 / f64::from(o.cycle_length);
        if o.phase < 1.0 {
            kept.push(o);
            continue;
        }
        if population >= p.n_max {
            o.phase -= 1.0;
            kept.push(o);
            continue;
        }
        population += 1;
        let u = unit_vector(&mut keyed(p.seed, key, o.id, Purpose::Division));
        for sign in [-1.0, 1.0] {
            let id = next_id;
            next_id += 1;
            let mut rng = keyed(p.seed, key, id, Purpose::Cycle);
            born.push(SimObject {
                id,
                parent_id: Some(o.id),
                x: add(o.x, scale(u, sign * 0.5 * o.r)),
                r: o.r,
                phase: 0.0,
                cycle_length: draw_cycle(&mut rng, p),
                appearance_seed: rng.gen(),
            });
        }
    }
    kept.extend(born);
    SimState { objects: kept, next_id }
}

/// Frame 0 (after relaxation) followed by `frames - 1` steps.
pub fn simulate(p: &SimParams) -> Result<Vec<SimState>> {
    let first = relax(&init_state(p)?, p, p.relax_steps);
    let mut out = vec![first];
    for f in 1..p.frames.max(1) {
        let next = step_simulation(out.last().expect("non-empty"), p, f);
        out.push(next);
    }
    Ok(out)
}
