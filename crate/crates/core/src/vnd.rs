//! Variable neighborhood descent over the k-flip structures.
//!
//! Building blocks:
//! - [`Searcher::algorithm0`] runs k-flip passes until a whole pass over the
//!   shuffled types of `N(k)` applies nothing;
//! - [`Searcher::algorithm0_k`] returns right after the first applied move;
//! - [`multi_start`] keeps the best of `max_local` random constructions, each
//!   polished by the exhaustive 1-flip search.
//!
//! The four variants all start from the multi-start result and differ in
//! which structure is searched after an improvement.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, Level, ModelError, Path, Solution};
use crate::neighborhoods::{
    fresh_sequences, permutation, scan_type, structures_for, ScanHooks, ScanMode, Structure,
};
use crate::seeding::{derive_seed, stream_rng};

/// Restarts allowed after the first construction attempt.
pub const CONSTRUCTION_RESTARTS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("could not construct a feasible solution after {attempts} attempts")]
    ConstructionFailed { attempts: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Bvnd,
    Pvnd,
    Cvnd,
    Uvnd,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Bvnd, Variant::Pvnd, Variant::Cvnd, Variant::Uvnd];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bvnd => "bvnd",
            Variant::Pvnd => "pvnd",
            Variant::Cvnd => "cvnd",
            Variant::Uvnd => "uvnd",
        }
    }

    /// Column label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Bvnd => "BVND",
            Variant::Pvnd => "PVND",
            Variant::Cvnd => "CVND",
            Variant::Uvnd => "UVND",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bvnd" => Ok(Variant::Bvnd),
            "pvnd" => Ok(Variant::Pvnd),
            "cvnd" => Ok(Variant::Cvnd),
            "uvnd" => Ok(Variant::Uvnd),
            _ => Err(SearchError::InvalidConfig(format!("unknown variant `{s}`"))),
        }
    }
}

/// How elapsed "time" is measured in traces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    /// Monotonic wall-clock seconds.
    #[default]
    Wall,
    /// Millions of evaluated candidate moves; reproducible across machines.
    Evaluations,
}

impl FromStr for ClockKind {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wall" => Ok(ClockKind::Wall),
            "evals" | "evaluations" => Ok(ClockKind::Evaluations),
            _ => Err(SearchError::InvalidConfig(format!("unknown clock `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VndConfig {
    pub variant: Variant,
    pub max_local: usize,
    pub master_seed: u64,
    pub time_limit: Option<Duration>,
    pub record_trace: bool,
    #[serde(default)]
    pub clock: ClockKind,
}

impl VndConfig {
    pub fn new(variant: Variant, max_local: usize, master_seed: u64) -> Self {
        Self {
            variant,
            max_local,
            master_seed,
            time_limit: None,
            record_trace: true,
            clock: ClockKind::Wall,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_local == 0 {
            return Err(SearchError::InvalidConfig("max_local must be at least 1".into()));
        }
        Ok(())
    }

    pub fn multi_start_seed(&self) -> u64 {
        derive_seed(self.master_seed, &["multistart"])
    }

    pub fn descent_seed(&self) -> u64 {
        derive_seed(self.master_seed, &[self.variant.name()])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub elapsed: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub points: Vec<TracePoint>,
    pub time_to_best: f64,
    pub final_objective: f64,
    pub truncated: bool,
    pub moves: u64,
    pub evaluations: u64,
}

impl SearchTrace {
    /// `elapsed_s,objective` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("elapsed_s,objective\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.elapsed, p.objective));
        }
        out
    }
}

/// Receives every applied move. Implementations must tolerate concurrent calls
/// from multi-start workers.
pub trait MoveObserver: Sync {
    fn on_move(&self, instance: &Instance, solution: &Solution, delta: f64);
}

struct Clock {
    kind: ClockKind,
    start: Instant,
    offset: f64,
    deadline: Option<Instant>,
}

impl Clock {
    fn elapsed(&self, evaluations: u64) -> f64 {
        self.offset
            + match self.kind {
                ClockKind::Wall => self.start.elapsed().as_secs_f64(),
                ClockKind::Evaluations => evaluations as f64 / 1e6,
            }
    }
}

/// Sequential descent state over one solution.
pub struct Searcher<'a> {
    instance: &'a Instance,
    structures: Vec<Structure>,
    rng: ChaCha8Rng,
    clock: Clock,
    record_trace: bool,
    observer: Option<&'a dyn MoveObserver>,
    trace: SearchTrace,
    last_objective: f64,
}

impl<'a> Searcher<'a> {
    pub fn new(instance: &'a Instance, rng: ChaCha8Rng) -> Self {
        Self {
            instance,
            structures: structures_for(instance.num_levels()).expect("validated instance"),
            rng,
            clock: Clock {
                kind: ClockKind::Wall,
                start: Instant::now(),
                offset: 0.0,
                deadline: None,
            },
            record_trace: false,
            observer: None,
            trace: SearchTrace::default(),
            last_objective: f64::INFINITY,
        }
    }

    pub fn with_clock(mut self, kind: ClockKind, offset: f64) -> Self {
        self.clock.kind = kind;
        self.clock.offset = offset;
        self
    }

    pub fn with_deadline(mut self, deadline: Option<Instant>) -> Self {
        self.clock.deadline = deadline;
        self
    }

    pub fn with_observer(mut self, observer: Option<&'a dyn MoveObserver>) -> Self {
        self.observer = observer;
        self
    }

    pub fn recording(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn max_k(&self) -> usize {
        self.structures.len()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn truncated(&self) -> bool {
        self.trace.truncated
    }

    /// Marks the starting point of the trace.
    pub fn begin(&mut self, solution: &Solution) {
        self.last_objective = solution.objective();
        let elapsed = self.clock.elapsed(self.trace.evaluations);
        self.trace.time_to_best = elapsed;
        self.trace.points.push(TracePoint {
            elapsed,
            objective: solution.objective(),
        });
    }

    pub fn finish(mut self, solution: &Solution) -> SearchTrace {
        self.trace.final_objective = solution.objective();
        self.trace
    }

    /// Runs one type scan, folding its evaluation count into the total.
    fn scan(&mut self, solution: &mut Solution, k: usize, type_pos: usize, mode: ScanMode) -> bool {
        let ty = self.structures[k - 1].types[type_pos];
        let instance = self.instance;
        let seqs = fresh_sequences(self.instance, &mut self.rng);
        let base = self.trace.evaluations;
        let mut hooks = Hooks { searcher: self, base };
        let out = scan_type(instance, solution, ty, &seqs, mode, &mut hooks);
        self.trace.evaluations = base + out.evaluated;
        out.applied > 0
    }

    /// Exhaustive k-flip search: repeats shuffled passes over the types of
    /// `N(k)` until a pass applies no move. Returns whether anything improved.
    pub fn algorithm0(&mut self, solution: &mut Solution, k: usize) -> bool {
        let n = self.structures[k - 1].types.len();
        let mut any = false;
        loop {
            let q = permutation(n, &mut self.rng);
            let mut improved = false;
            for h in q {
                improved |= self.scan(solution, k, h, ScanMode::Exhaustive);
                if self.truncated() {
                    return any || improved;
                }
            }
            any |= improved;
            if !improved {
                return any;
            }
        }
    }

    /// Like [`Self::algorithm0`] but returns after the first applied move.
    pub fn algorithm0_k(&mut self, solution: &mut Solution, k: usize) -> bool {
        let n = self.structures[k - 1].types.len();
        let q = permutation(n, &mut self.rng);
        for h in q {
            if self.scan(solution, k, h, ScanMode::FirstImprovement) {
                return true;
            }
            if self.truncated() {
                return false;
            }
        }
        false
    }

    pub fn bvnd(&mut self, solution: &mut Solution) {
        let max_k = self.max_k();
        loop {
            self.algorithm0(solution, 1);
            let mut improved = false;
            for k in 2..=max_k {
                if self.truncated() {
                    return;
                }
                if self.algorithm0_k(solution, k) {
                    improved = true;
                    break;
                }
            }
            if !improved || self.truncated() {
                return;
            }
        }
    }

    pub fn pvnd(&mut self, solution: &mut Solution) {
        let max_k = self.max_k();
        loop {
            let mut improved = false;
            for k in 1..=max_k {
                improved |= self.algorithm0(solution, k);
                if self.truncated() {
                    return;
                }
            }
            if !improved {
                return;
            }
        }
    }

    pub fn cvnd(&mut self, solution: &mut Solution) {
        let max_k = self.max_k();
        loop {
            let mut improved = false;
            for k in 1..=max_k {
                improved |= self.algorithm0_k(solution, k);
                if self.truncated() {
                    return;
                }
            }
            if !improved {
                return;
            }
        }
    }

    pub fn uvnd(&mut self, solution: &mut Solution) {
        let max_k = self.max_k();
        loop {
            let order = permutation(max_k, &mut self.rng);
            let mut improved = false;
            for k in order.into_iter().map(|i| i + 1) {
                improved |= self.algorithm0_k(solution, k);
                if self.truncated() {
                    return;
                }
            }
            if !improved {
                return;
            }
        }
    }

    pub fn run(&mut self, variant: Variant, solution: &mut Solution) {
        match variant {
            Variant::Bvnd => self.bvnd(solution),
            Variant::Pvnd => self.pvnd(solution),
            Variant::Cvnd => self.cvnd(solution),
            Variant::Uvnd => self.uvnd(solution),
        }
    }
}

struct Hooks<'s, 'a> {
    searcher: &'s mut Searcher<'a>,
    base: u64,
}

impl ScanHooks for Hooks<'_, '_> {
    fn on_applied(&mut self, solution: &Solution, delta: f64, evaluated: u64) -> ControlFlow<()> {
        let s = &mut *self.searcher;
        debug_assert!(solution.objective() < s.last_objective);
        s.last_objective = solution.objective();
        s.trace.moves += 1;
        if let Some(obs) = s.observer {
            obs.on_move(s.instance, solution, delta);
        }
        let elapsed = s.clock.elapsed(self.base + evaluated);
        s.trace.time_to_best = elapsed;
        if s.record_trace {
            s.trace.points.push(TracePoint {
                elapsed,
                objective: solution.objective(),
            });
        }
        if s.clock.deadline.is_some_and(|d| Instant::now() >= d) {
            s.trace.truncated = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    }
}

/// Greedy randomized construction: retailers in random order each take the
/// path of least marginal cost (arcs plus fixed costs of facilities not yet
/// open) among facilities that keep every level within its bound.
///
/// The first attempt may use any facility. When the bounds are tight that
/// greedy can strand a retailer, so later attempts first shrink each level to
/// its bound by randomly dropping facilities that no retailer depends on, and
/// then run the same greedy inside the surviving set.
pub fn construct_initial<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<Solution, SearchError> {
    let attempts = CONSTRUCTION_RESTARTS + 1;
    for attempt in 0..attempts {
        let allowed = if attempt == 0 {
            all_facilities(instance)
        } else {
            match bounded_cover(instance, attempt, rng) {
                Some(a) => a,
                None => continue,
            }
        };
        if let Some(paths) = greedy_paths(instance, &allowed, rng) {
            return Ok(Solution::from_paths(instance, paths)?);
        }
    }
    Err(SearchError::ConstructionFailed { attempts })
}

fn all_facilities(instance: &Instance) -> [Vec<bool>; 4] {
    let mut allowed: [Vec<bool>; 4] = Default::default();
    for &l in instance.levels() {
        allowed[l.index()] = vec![true; instance.size(l)];
    }
    allowed
}

/// Randomized drop heuristic. While some level exceeds its bound, the
/// facility whose retailers have the most alternatives at its level is
/// removed, provided every retailer stays served. Levels are shrunk in order
/// of increasing bound. Returns `None` when no
/// facility can be removed from a level that is still over its bound.
fn bounded_cover<R: Rng + ?Sized>(instance: &Instance, attempt: usize, rng: &mut R) -> Option<[Vec<bool>; 4]> {
    // later attempts randomize the drop order more strongly
    let spread = 1.25 + 0.1 * attempt as f64;
    let mut allowed = all_facilities(instance);
    let mut count = [0usize; 4];
    for &l in instance.levels() {
        count[l.index()] = instance.size(l);
    }
    loop {
        // the level with the smallest bound goes first
        let Some(level) = instance
            .levels()
            .iter()
            .copied()
            .filter(|&l| count[l.index()] > instance.upper_bound(l))
            .min_by_key(|&l| instance.upper_bound(l))
        else {
            return Some(allowed);
        };
        let over = [level];
        let reach = instance.downward_reach(&allowed);
        let fed = fed_from_above(instance, &allowed);
        let mut candidates = Vec::new();
        for &l in &over {
            let i = l.index();
            // alternatives[r]: facilities of this level able to serve r
            let mut alternatives = vec![0u32; instance.num_retailers()];
            for f in (0..instance.size(l)).filter(|&f| allowed[i][f] && fed[i][f]) {
                for_each_bit(&reach[i][f], |r| alternatives[r] += 1);
            }
            for f in (0..instance.size(l)).filter(|&f| allowed[i][f]) {
                let mut score = 0.0;
                let mut critical = false;
                if fed[i][f] {
                    for_each_bit(&reach[i][f], |r| match alternatives[r] {
                        0 | 1 => critical = true,
                        n => score += 1.0 / f64::from(n - 1),
                    });
                }
                if !critical {
                    candidates.push((score * rng.gen_range(1.0 / spread..spread), l, f));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut dropped = false;
        for (_, l, f) in candidates {
            allowed[l.index()][f] = false;
            if instance.covered_retailers(&allowed).iter().all(|&c| c) {
                count[l.index()] -= 1;
                dropped = true;
                break;
            }
            allowed[l.index()][f] = true;
        }
        if !dropped {
            return None;
        }
    }
}

/// Whether each allowed facility has an allowed supply chain above it.
fn fed_from_above(instance: &Instance, allowed: &[Vec<bool>; 4]) -> [Vec<bool>; 4] {
    let mut fed: [Vec<bool>; 4] = Default::default();
    let levels = instance.levels();
    for (k, &l) in levels.iter().enumerate() {
        let i = l.index();
        fed[i] = (0..instance.size(l))
            .map(|f| {
                allowed[i][f]
                    && (k == 0 || {
                        let a = levels[k - 1];
                        (0..instance.size(a)).any(|g| fed[a.index()][g] && instance.arc(a, g, f) > 0.0)
                    })
            })
            .collect();
    }
    fed
}

fn for_each_bit(set: &[u64], mut f: impl FnMut(usize)) {
    for (w, &word) in set.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            f(w * 64 + bits.trailing_zeros() as usize);
            bits &= bits - 1;
        }
    }
}

fn greedy_paths<R: Rng + ?Sized>(instance: &Instance, allowed: &[Vec<bool>; 4], rng: &mut R) -> Option<Vec<Path>> {
    let order = permutation(instance.num_retailers(), rng);
    let mut state = OpenState::new(instance, allowed);
    let mut paths = vec![Path::default(); instance.num_retailers()];
    for r in order {
        let path = cheapest_path(instance, &state, r)?;
        state.open_path(instance, &path);
        paths[r] = path;
    }
    Some(paths)
}

struct OpenState<'a> {
    allowed: &'a [Vec<bool>; 4],
    open: [Vec<bool>; 4],
    count: [usize; 4],
}

impl<'a> OpenState<'a> {
    fn new(instance: &Instance, allowed: &'a [Vec<bool>; 4]) -> Self {
        let mut open: [Vec<bool>; 4] = Default::default();
        for &l in instance.levels() {
            open[l.index()] = vec![false; instance.size(l)];
        }
        Self {
            allowed,
            open,
            count: [0; 4],
        }
    }

    /// Marginal fixed cost of using `f`, or `None` when it is excluded or
    /// opening it would break the bound.
    fn marginal(&self, instance: &Instance, level: Level, f: usize) -> Option<f64> {
        let i = level.index();
        if !self.allowed[i][f] {
            None
        } else if self.open[i][f] {
            Some(0.0)
        } else if self.count[i] < instance.upper_bound(level) {
            Some(instance.fixed_cost(level, f))
        } else {
            None
        }
    }

    fn open_path(&mut self, instance: &Instance, path: &Path) {
        for &l in instance.levels() {
            let slot = &mut self.open[l.index()][path.get(l)];
            if !*slot {
                *slot = true;
                self.count[l.index()] += 1;
            }
        }
    }
}

/// Layered shortest path from the top level down to retailer `r`.
fn cheapest_path(instance: &Instance, state: &OpenState<'_>, r: usize) -> Option<Path> {
    let levels = instance.levels();
    // best[i][f]: cheapest partial path ending at facility f of levels[i]
    let mut best: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
    let mut parent: Vec<Vec<usize>> = Vec::with_capacity(levels.len());
    for (i, &level) in levels.iter().enumerate() {
        let n = instance.size(level);
        let mut cost = vec![f64::INFINITY; n];
        let mut from = vec![usize::MAX; n];
        for (f, slot) in cost.iter_mut().enumerate() {
            let Some(fixed) = state.marginal(instance, level, f) else {
                continue;
            };
            if level == Level::Plant && !instance.plant_eligible(f, r) {
                continue;
            }
            if i == 0 {
                *slot = fixed;
                continue;
            }
            let above = levels[i - 1];
            for (g, &c) in best[i - 1].iter().enumerate() {
                let arc = instance.arc(above, g, f);
                if c.is_finite() && arc > 0.0 && c + arc + fixed < *slot {
                    *slot = c + arc + fixed;
                    from[f] = g;
                }
            }
        }
        best.push(cost);
        parent.push(from);
    }
    let last = levels.len() - 1;
    let mut end = None;
    let mut end_cost = f64::INFINITY;
    for (d, &c) in best[last].iter().enumerate() {
        let arc = instance.arc(Level::Distribution, d, r);
        if c.is_finite() && arc > 0.0 && c + arc < end_cost {
            end_cost = c + arc;
            end = Some(d);
        }
    }
    let mut path = Path::default();
    let mut f = end?;
    for i in (0..levels.len()).rev() {
        path.set(levels[i], f);
        if i > 0 {
            f = parent[i][f];
        }
    }
    Some(path)
}

/// Options shared by every phase of a run.
#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub clock: ClockKind,
    pub deadline: Option<Instant>,
    pub record_trace: bool,
    pub observer: Option<&'a dyn MoveObserver>,
}

impl<'a> RunOptions<'a> {
    pub fn from_config(config: &VndConfig, observer: Option<&'a dyn MoveObserver>) -> Self {
        Self {
            clock: config.clock,
            deadline: config.time_limit.map(|t| Instant::now() + t),
            record_trace: config.record_trace,
            observer,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiStartResult {
    pub solution: Solution,
    /// Index of the winning start.
    pub best_start: usize,
    /// Final objective of every start, by index.
    pub start_objectives: Vec<f64>,
    /// Phase duration in the clock's units.
    pub elapsed: f64,
    pub evaluations: u64,
}

/// One construction plus exhaustive 1-flip descent on stream `index` of `seed`.
pub fn single_start(
    instance: &Instance,
    seed: u64,
    index: usize,
    opts: &RunOptions<'_>,
) -> Result<(Solution, u64), SearchError> {
    let mut rng = stream_rng(seed, index as u64);
    let mut solution = construct_initial(instance, &mut rng)?;
    let mut searcher = Searcher::new(instance, rng)
        .with_deadline(opts.deadline)
        .with_observer(opts.observer);
    searcher.begin(&solution);
    searcher.algorithm0(&mut solution, 1);
    let trace = searcher.finish(&solution);
    Ok((solution, trace.evaluations))
}

/// Best of `max_local` independent starts (ties go to the lowest index). The
/// result does not depend on how many worker threads execute the starts.
pub fn multi_start(
    instance: &Instance,
    max_local: usize,
    seed: u64,
    opts: &RunOptions<'_>,
) -> Result<MultiStartResult, SearchError> {
    if max_local == 0 {
        return Err(SearchError::InvalidConfig("max_local must be at least 1".into()));
    }
    let started = Instant::now();
    let runs: Vec<Result<(Solution, u64), SearchError>> = (0..max_local)
        .into_par_iter()
        .map(|i| single_start(instance, seed, i, opts))
        .collect();
    let mut best: Option<(usize, Solution)> = None;
    let mut start_objectives = Vec::with_capacity(max_local);
    let mut evaluations = 0;
    for (i, run) in runs.into_iter().enumerate() {
        let (sol, evals) = run?;
        evaluations += evals;
        start_objectives.push(sol.objective());
        if best.as_ref().is_none_or(|(_, b)| sol.objective() < b.objective()) {
            best = Some((i, sol));
        }
    }
    let (best_start, solution) = best.expect("at least one start");
    let elapsed = match opts.clock {
        ClockKind::Wall => started.elapsed().as_secs_f64(),
        ClockKind::Evaluations => evaluations as f64 / 1e6,
    };
    Ok(MultiStartResult {
        solution,
        best_start,
        start_objectives,
        elapsed,
        evaluations,
    })
}

/// Runs `variant` from `start`; trace times are offset by `time_offset`.
pub fn descend(
    instance: &Instance,
    start: Solution,
    variant: Variant,
    seed: u64,
    time_offset: f64,
    opts: &RunOptions<'_>,
) -> (Solution, SearchTrace) {
    let mut solution = start;
    let mut searcher = Searcher::new(instance, stream_rng(seed, 0))
        .with_clock(opts.clock, time_offset)
        .with_deadline(opts.deadline)
        .with_observer(opts.observer)
        .recording(opts.record_trace);
    searcher.begin(&solution);
    searcher.run(variant, &mut solution);
    let trace = searcher.finish(&solution);
    (solution, trace)
}

/// Multi-start followed by the configured variant.
pub fn solve(instance: &Instance, config: &VndConfig) -> Result<(Solution, SearchTrace), SearchError> {
    solve_observed(instance, config, None)
}

pub fn solve_observed(
    instance: &Instance,
    config: &VndConfig,
    observer: Option<&dyn MoveObserver>,
) -> Result<(Solution, SearchTrace), SearchError> {
    config.validate()?;
    let opts = RunOptions::from_config(config, observer);
    let ms = multi_start(instance, config.max_local, config.multi_start_seed(), &opts)?;
    let (solution, mut trace) = descend(
        instance,
        ms.solution,
        config.variant,
        config.descent_seed(),
        ms.elapsed,
        &opts,
    );
    trace.evaluations += ms.evaluations;
    Ok((solution, trace))
}

fn solve_as(instance: &Instance, config: &VndConfig, variant: Variant) -> Result<(Solution, SearchTrace), SearchError> {
    let config = VndConfig {
        variant,
        ..config.clone()
    };
    solve(instance, &config)
}

pub fn bvnd(instance: &Instance, config: &VndConfig) -> Result<(Solution, SearchTrace), SearchError> {
    solve_as(instance, config, Variant::Bvnd)
}

pub fn pvnd(instance: &Instance, config: &VndConfig) -> Result<(Solution, SearchTrace), SearchError> {
    solve_as(instance, config, Variant::Pvnd)
}

pub fn cvnd(instance: &Instance, config: &VndConfig) -> Result<(Solution, SearchTrace), SearchError> {
    solve_as(instance, config, Variant::Cvnd)
}

pub fn uvnd(instance: &Instance, config: &VndConfig) -> Result<(Solution, SearchTrace), SearchError> {
    solve_as(instance, config, Variant::Uvnd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, DensityClass, FixedClass, GeneratorParams};
    use crate::model::fixtures::*;
    use crate::model::check_feasible;
    use crate::neighborhoods::improving_moves;
    use rand::SeedableRng;

    fn small_instance(levels: u8, r: usize, seed: u64) -> Instance {
        let mut p = GeneratorParams::new(levels, r, DensityClass::Medium, FixedClass::Medium, seed);
        p.distribution_centers = 8;
        p.warehouses = 5;
        p.plants = 4;
        if levels == 5 {
            p.suppliers = 4;
        }
        generate(&p).unwrap()
    }

    #[test]
    fn construct_t1_and_t2() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sol = construct_initial(&t1(), &mut rng).unwrap();
        assert_eq!(sol.objective(), 485.0);
        let sol = construct_initial(&t2(1, 2), &mut rng).unwrap();
        assert_eq!(sol.path(0).get(Level::Distribution), 0);
        assert_eq!(sol.objective(), 485.0);
    }

    #[test]
    fn construct_random_is_feasible() {
        let inst = small_instance(5, 50, 3);
        let sol = construct_initial(&inst, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(check_feasible(&inst, &sol).is_empty());
        let inst = small_instance(4, 50, 4);
        let sol = construct_initial(&inst, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(check_feasible(&inst, &sol).is_empty());
    }

    #[test]
    fn construction_fails_when_bounds_force_it() {
        // Two retailers, each reachable only through its own DC, but ub_D = 1.
        let mut data = t2_data(2, 1);
        data.cost_DR = vec![vec![5.0, 0.0], vec![0.0, 7.0]];
        let inst = Instance::try_from(data).unwrap();
        let err = construct_initial(&inst, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, SearchError::ConstructionFailed { attempts: 51 });
    }

    #[test]
    fn algorithm0_on_t1_is_noop() {
        let inst = t1();
        let mut sol = Solution::from_paths(&inst, vec![Path::new(0, 0, 0, 0)]).unwrap();
        let mut s = Searcher::new(&inst, ChaCha8Rng::seed_from_u64(0));
        for k in 1..=4 {
            assert!(!s.algorithm0(&mut sol, k));
            assert!(!s.algorithm0_k(&mut sol, k));
        }
        assert_eq!(sol.objective(), 485.0);
    }

    #[test]
    fn algorithm0_reaches_local_optimum() {
        for seed in 0..4 {
            let inst = small_instance(5, 30, seed);
            let mut sol = construct_initial(&inst, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut s = Searcher::new(&inst, ChaCha8Rng::seed_from_u64(seed));
            for k in 1..=2 {
                s.algorithm0(&mut sol, k);
                let types = &s.structures[k - 1].types.clone();
                assert!(improving_moves(&inst, &sol, types).is_empty());
                assert!(sol.is_consistent(&inst));
            }
        }
    }

    #[test]
    fn algorithm0_k_applies_exactly_one_move() {
        let types = structures_for(4).unwrap()[0].types.clone();
        let (inst, mut sol) = (0..50)
            .map(|seed| {
                let inst = small_instance(4, 30, seed);
                let sol = construct_initial(&inst, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                (inst, sol)
            })
            .find(|(inst, sol)| !improving_moves(inst, sol, &types).is_empty())
            .expect("some construction is not 1-flip optimal");
        let mut s = Searcher::new(&inst, ChaCha8Rng::seed_from_u64(2));
        s.begin(&sol);
        let before = sol.objective();
        assert!(s.algorithm0_k(&mut sol, 1));
        assert_eq!(s.trace.moves, 1);
        assert!(sol.objective() < before);
    }

    #[test]
    fn multi_start_is_min_over_starts() {
        let inst = small_instance(5, 20, 5);
        let opts = RunOptions::default();
        let ms = multi_start(&inst, 6, 77, &opts).unwrap();
        let min = ms.start_objectives.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(ms.solution.objective(), min);
        assert_eq!(ms.start_objectives[ms.best_start], min);
        assert!(ms.start_objectives[..ms.best_start].iter().all(|&o| o > min));

        let single = multi_start(&inst, 1, 77, &opts).unwrap();
        let (direct, _) = single_start(&inst, 77, 0, &opts).unwrap();
        assert_eq!(single.solution, direct);
    }

    #[test]
    fn multi_start_independent_of_threads() {
        let inst = small_instance(4, 40, 6);
        let opts = RunOptions::default();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| multi_start(&inst, 8, 5, &opts).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let b = four.install(|| multi_start(&inst, 8, 5, &opts).unwrap());
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.start_objectives, b.start_objectives);
    }

    #[test]
    fn variants_on_t1() {
        let inst = t1();
        for v in Variant::ALL {
            let (sol, trace) = solve(&inst, &VndConfig::new(v, 5, 1)).unwrap();
            assert_eq!(sol.objective(), 485.0);
            assert_eq!(trace.points.len(), 1);
            assert_eq!(trace.final_objective, 485.0);
        }
    }

    #[test]
    fn variants_end_locally_optimal_for_every_k() {
        let inst = small_instance(4, 25, 12);
        let structures = structures_for(4).unwrap();
        let all: Vec<_> = structures.iter().flat_map(|s| s.types.clone()).collect();
        for v in Variant::ALL {
            let cfg = VndConfig::new(v, 3, 21);
            let (sol, trace) = solve(&inst, &cfg).unwrap();
            assert!(check_feasible(&inst, &sol).is_empty());
            assert!(sol.is_consistent(&inst));
            assert!(improving_moves(&inst, &sol, &structures[0].types).is_empty());
            assert!(improving_moves(&inst, &sol, &all).is_empty(), "{v}");
            assert!(trace.points.windows(2).all(|w| w[1].objective < w[0].objective));
            let again = solve(&inst, &cfg).unwrap().0;
            assert_eq!(again, sol);
        }
    }

    #[test]
    fn b1_reaches_enumerated_optimum() {
        let inst = b1();
        let mut best = f64::INFINITY;
        for d0 in 0..2 {
            for d1 in 0..2 {
                let sol = Solution::from_paths(&inst, vec![Path::new(0, 0, 0, d0), Path::new(0, 0, 0, d1)]).unwrap();
                best = best.min(sol.objective());
            }
        }
        assert_eq!(best, 561.0);
        for v in Variant::ALL {
            for seed in 0..5 {
                let (sol, _) = solve(&inst, &VndConfig::new(v, 1, seed)).unwrap();
                assert_eq!(sol.objective(), best, "{v}");
            }
        }
        // starting from the worst assignment, one exhaustive 1-flip search suffices
        let mut sol = Solution::from_paths(&inst, vec![Path::new(0, 0, 0, 1), Path::new(0, 0, 0, 0)]).unwrap();
        let mut s = Searcher::new(&inst, ChaCha8Rng::seed_from_u64(0));
        assert!(s.algorithm0(&mut sol, 1));
        assert_eq!(sol.objective(), best);
    }

    #[test]
    fn evaluation_clock_is_reproducible() {
        let inst = small_instance(5, 20, 8);
        let mut cfg = VndConfig::new(Variant::Cvnd, 4, 3);
        cfg.clock = ClockKind::Evaluations;
        let (_, a) = solve(&inst, &cfg).unwrap();
        let (_, b) = solve(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.evaluations > 0);
    }

    #[test]
    fn time_limit_truncates() {
        let inst = small_instance(5, 60, 2);
        let mut cfg = VndConfig::new(Variant::Pvnd, 2, 3);
        cfg.time_limit = Some(Duration::ZERO);
        let (sol, trace) = solve(&inst, &cfg).unwrap();
        assert!(check_feasible(&inst, &sol).is_empty());
        assert!(trace.truncated || trace.moves == 0);
    }

    #[test]
    fn trace_csv_header() {
        let trace = SearchTrace {
            points: vec![TracePoint { elapsed: 0.5, objective: 10.0 }],
            ..Default::default()
        };
        assert_eq!(trace.to_csv(), "elapsed_s,objective\n0.5,10\n");
    }

    #[test]
    fn zero_max_local_rejected() {
        let cfg = VndConfig::new(Variant::Bvnd, 0, 1);
        assert!(matches!(solve(&t1(), &cfg), Err(SearchError::InvalidConfig(_))));
    }
}
