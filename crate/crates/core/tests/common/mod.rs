#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use mfl::generator::{generate, DensityClass, FixedClass, GeneratorParams};
use mfl::model::{check_feasible, Instance, InstanceData, InstanceMeta, Path, Solution};
use mfl::neighborhoods::Move;
use mfl::vnd::MoveObserver;
use rand::Rng;

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

/// One retailer, one facility per level; optimum 485.
pub fn t1_data() -> InstanceData {
    InstanceData {
        num_levels: 5,
        R: 1,
        D: 1,
        W: 1,
        P: 1,
        S: 1,
        cost_DR: vec![vec![5.0]],
        cost_WD: vec![vec![100.0]],
        cost_PW: vec![vec![5.0]],
        cost_SP: vec![vec![5.0]],
        elig_PR: vec![vec![1]],
        fixed_D: vec![50.0],
        fixed_W: vec![100.0],
        fixed_P: vec![200.0],
        fixed_S: vec![20.0],
        ub_D: 1,
        ub_W: 1,
        ub_P: 1,
        ub_S: 1,
        meta: InstanceMeta::default(),
    }
}

/// Two retailers whose only distribution centers are disjoint, with room for one.
pub fn infeasible_data() -> InstanceData {
    let mut d = t1_data();
    d.R = 2;
    d.D = 2;
    d.cost_DR = vec![vec![5.0, 0.0], vec![0.0, 7.0]];
    d.cost_WD = vec![vec![100.0, 100.0]];
    d.elig_PR = vec![vec![1, 1]];
    d.fixed_D = vec![50.0, 60.0];
    d.ub_D = 1;
    d
}

/// Small generated instance: R in 4..=6, D and W in 2..=3, P and S in 1..=2.
pub fn tiny_instance<R: Rng>(rng: &mut R, num_levels: u8) -> Instance {
    let density = DensityClass::ALL[rng.gen_range(0..3)];
    let fixed = FixedClass::ALL[rng.gen_range(0..3)];
    let mut p = GeneratorParams::new(num_levels, rng.gen_range(4..=6), density, fixed, rng.gen());
    p.distribution_centers = rng.gen_range(2..=3);
    p.warehouses = rng.gen_range(2..=3);
    p.plants = rng.gen_range(1..=2);
    p.suppliers = if num_levels == 5 { rng.gen_range(1..=2) } else { 0 };
    generate(&p).expect("tiny instance")
}

pub fn sized_instance(num_levels: u8, retailers: usize, dwps: [usize; 4], density: DensityClass, seed: u64) -> Instance {
    let mut p = GeneratorParams::new(num_levels, retailers, density, FixedClass::Medium, seed);
    p.distribution_centers = dwps[0];
    p.warehouses = dwps[1];
    p.plants = dwps[2];
    p.suppliers = if num_levels == 5 { dwps[3] } else { 0 };
    generate(&p).expect("generated instance")
}

/// Every eligible path of every retailer.
pub fn eligible_paths(inst: &Instance) -> Vec<Vec<Path>> {
    let levels = inst.levels();
    let mut all = Vec::new();
    let mut idx = vec![0usize; levels.len()];
    loop {
        all.push(Path::from_slice(levels, &idx).unwrap());
        let mut pos = levels.len();
        loop {
            if pos == 0 {
                return (0..inst.num_retailers())
                    .map(|r| all.iter().copied().filter(|p| inst.path_eligible(p, r)).collect())
                    .collect();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < inst.size(levels[pos]) {
                break;
            }
            idx[pos] = 0;
        }
    }
}

struct Enum<'a> {
    inst: &'a Instance,
    paths: Vec<Vec<Path>>,
    usage: [Vec<u32>; 4],
    open: [usize; 4],
    best: f64,
}

impl Enum<'_> {
    fn dfs(&mut self, r: usize, cost: f64) {
        if cost >= self.best {
            return;
        }
        if r == self.paths.len() {
            self.best = cost;
            return;
        }
        for i in 0..self.paths[r].len() {
            let path = self.paths[r][i];
            let mut add = self.inst.path_arc_cost(&path, r);
            let mut ok = true;
            for &l in self.inst.levels() {
                let f = path.get(l);
                if self.usage[l.index()][f] == 0 {
                    add += self.inst.fixed_cost(l, f);
                    self.open[l.index()] += 1;
                }
                self.usage[l.index()][f] += 1;
                ok &= self.open[l.index()] <= self.inst.upper_bound(l);
            }
            if ok {
                self.dfs(r + 1, cost + add);
            }
            for &l in self.inst.levels() {
                let f = path.get(l);
                self.usage[l.index()][f] -= 1;
                if self.usage[l.index()][f] == 0 {
                    self.open[l.index()] -= 1;
                }
            }
        }
    }
}

/// Exact optimum over all bound-feasible assignments, by depth-first
/// enumeration with cost pruning. `None` when nothing is feasible.
pub fn enumerate_optimum(inst: &Instance) -> Option<f64> {
    let mut usage: [Vec<u32>; 4] = Default::default();
    for &l in inst.levels() {
        usage[l.index()] = vec![0; inst.size(l)];
    }
    let mut e = Enum {
        inst,
        paths: eligible_paths(inst),
        usage,
        open: [0; 4],
        best: f64::INFINITY,
    };
    e.dfs(0, 0.0);
    e.best.is_finite().then_some(e.best)
}

/// A random eligible move of random size on a random retailer. May be
/// inadmissible; `None` when the draw hit no eligible target.
pub fn random_move<R: Rng>(inst: &Instance, sol: &Solution, rng: &mut R) -> Option<Move> {
    let r = rng.gen_range(0..inst.num_retailers());
    let current = *sol.path(r);
    let levels = inst.levels();
    let mask = rng.gen_range(1u32..(1 << levels.len()));
    let mut reps = Vec::new();
    for (i, &l) in levels.iter().enumerate() {
        if mask & (1 << i) != 0 {
            if inst.size(l) < 2 {
                return None;
            }
            let mut f = rng.gen_range(0..inst.size(l) - 1);
            if f >= current.get(l) {
                f += 1;
            }
            reps.push((l, f));
        }
    }
    let mv = Move::new(inst, sol, r, &reps).ok()?;
    inst.path_eligible(&mv.target_path(&current), r).then_some(mv)
}

/// Checks every applied move: strictly improving, solution consistent and feasible.
#[derive(Default)]
pub struct InvariantObserver {
    pub moves: AtomicU64,
    pub non_improving: AtomicU64,
    pub inconsistent: AtomicU64,
    pub infeasible: AtomicU64,
}

impl InvariantObserver {
    pub fn violations(&self) -> u64 {
        self.non_improving.load(Ordering::Relaxed)
            + self.inconsistent.load(Ordering::Relaxed)
            + self.infeasible.load(Ordering::Relaxed)
    }

    pub fn moves(&self) -> u64 {
        self.moves.load(Ordering::Relaxed)
    }
}

impl MoveObserver for InvariantObserver {
    fn on_move(&self, instance: &Instance, solution: &Solution, delta: f64) {
        self.moves.fetch_add(1, Ordering::Relaxed);
        if delta >= 0.0 {
            self.non_improving.fetch_add(1, Ordering::Relaxed);
        }
        if !solution.is_consistent(instance) {
            self.inconsistent.fetch_add(1, Ordering::Relaxed);
        }
        if !check_feasible(instance, solution).is_empty() {
            self.infeasible.fetch_add(1, Ordering::Relaxed);
        }
    }
}

pub fn fraction_nonzero<I: IntoIterator<Item = bool>>(it: I) -> f64 {
    let (mut hit, mut n) = (0usize, 0usize);
    for b in it {
        n += 1;
        hit += b as usize;
    }
    hit as f64 / n as f64
}
