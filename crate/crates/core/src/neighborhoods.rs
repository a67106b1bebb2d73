//! k-flip neighborhood structures, random scan sequences and exact incremental
//! move evaluation.
//!
//! A neighborhood type is a nonempty set of facility levels; a k-flip of that
//! type replaces the facility at each of those levels on one retailer's path.
//! Structure `N(k)` groups all types with exactly `k` levels.

use std::fmt;
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::{active_levels, Instance, Level, ModelError, Path, Solution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoveError {
    #[error("retailer {0} out of range")]
    RetailerOutOfRange(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("move lists level {0} twice or the level is not part of the instance")]
    BadLevel(Level),
    #[error("replacement at level {0} equals the current facility")]
    SelfReplacement(Level),
    #[error("move must flip at least one level")]
    Empty,
    #[error("move uses an ineligible arc or plant")]
    IneligibleMove,
    #[error("move would exceed an open-facility upper bound")]
    InadmissibleMove,
}

/// A set of levels flipped together, stored as a bitmask over [`Level::index`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeighborhoodType(u8);

impl NeighborhoodType {
    pub fn from_levels(levels: &[Level]) -> Self {
        NeighborhoodType(levels.iter().fold(0, |m, l| m | (1 << l.index())))
    }

    pub fn contains(self, level: Level) -> bool {
        self.0 & (1 << level.index()) != 0
    }

    /// Flipped levels, top first.
    pub fn levels(self) -> Vec<Level> {
        Level::ALL.into_iter().filter(|&l| self.contains(l)).collect()
    }

    pub fn k(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Debug for NeighborhoodType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.levels().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Neighborhood structure `N(k)`: all types flipping exactly `k` levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub k: usize,
    pub types: Vec<NeighborhoodType>,
}

/// `N(1) .. N(max_k)` for the given level count. Types inside a structure are
/// ordered lexicographically by their top-first level tuple.
pub fn structures_for(num_levels: u8) -> Result<Vec<Structure>, ModelError> {
    let levels = active_levels(num_levels)?;
    let n = levels.len();
    let mut by_k: Vec<Vec<Vec<Level>>> = vec![Vec::new(); n + 1];
    for mask in 1u32..(1 << n) {
        let subset: Vec<Level> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| levels[i]).collect();
        by_k[subset.len()].push(subset);
    }
    Ok(by_k
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(k, mut subsets)| {
            subsets.sort();
            Structure {
                k,
                types: subsets.iter().map(|s| NeighborhoodType::from_levels(s)).collect(),
            }
        })
        .collect())
}

/// A k-flip on one retailer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    retailer: usize,
    replacements: [Option<usize>; 4],
}

impl Move {
    /// Validates that each replacement differs from the retailer's current facility.
    pub fn new(
        instance: &Instance,
        solution: &Solution,
        retailer: usize,
        replacements: &[(Level, usize)],
    ) -> Result<Self, MoveError> {
        if retailer >= instance.num_retailers() {
            return Err(MoveError::RetailerOutOfRange(retailer));
        }
        if replacements.is_empty() {
            return Err(MoveError::Empty);
        }
        let current = solution.path(retailer);
        let mut slots = [None; 4];
        for &(level, facility) in replacements {
            if !instance.has_level(level) || slots[level.index()].is_some() {
                return Err(MoveError::BadLevel(level));
            }
            if facility >= instance.size(level) {
                return Err(ModelError::IndexOutOfRange {
                    level,
                    index: facility,
                    size: instance.size(level),
                }
                .into());
            }
            if current.get(level) == facility {
                return Err(MoveError::SelfReplacement(level));
            }
            slots[level.index()] = Some(facility);
        }
        Ok(Move {
            retailer,
            replacements: slots,
        })
    }

    pub fn retailer(&self) -> usize {
        self.retailer
    }

    pub fn replacement(&self, level: Level) -> Option<usize> {
        self.replacements[level.index()]
    }

    pub fn kind(&self) -> NeighborhoodType {
        let levels: Vec<Level> = Level::ALL
            .into_iter()
            .filter(|l| self.replacements[l.index()].is_some())
            .collect();
        NeighborhoodType::from_levels(&levels)
    }

    pub fn target_path(&self, current: &Path) -> Path {
        let mut path = *current;
        for level in Level::ALL {
            if let Some(f) = self.replacements[level.index()] {
                path.set(level, f);
            }
        }
        path
    }

    /// The move that restores `before` (the path prior to applying `self`).
    pub fn inverse(&self, before: &Path) -> Move {
        let mut slots = [None; 4];
        for level in Level::ALL {
            if self.replacements[level.index()].is_some() {
                slots[level.index()] = Some(before.get(level));
            }
        }
        Move {
            retailer: self.retailer,
            replacements: slots,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveEval {
    pub delta: f64,
    pub admissible: bool,
}

/// Objective change and bound admissibility of replacing `retailer`'s path by
/// `new_path`, where only levels in `flipped` may differ.
#[inline]
pub(crate) fn evaluate_reassign(
    instance: &Instance,
    solution: &Solution,
    retailer: usize,
    new_path: &Path,
    flipped: &[Level],
) -> MoveEval {
    let old = solution.path(retailer);
    let mut delta = instance.path_arc_cost(new_path, retailer) - instance.path_arc_cost(old, retailer);
    let mut admissible = true;
    for &level in flipped {
        let (from, to) = (old.get(level), new_path.get(level));
        if from == to {
            continue;
        }
        let mut open = solution.open_count(level);
        if solution.usage(level, from) == 1 {
            delta -= instance.fixed_cost(level, from);
            open -= 1;
        }
        if solution.usage(level, to) == 0 {
            delta += instance.fixed_cost(level, to);
            open += 1;
        }
        if open > instance.upper_bound(level) {
            admissible = false;
        }
    }
    MoveEval { delta, admissible }
}

pub fn delta_cost(instance: &Instance, solution: &Solution, mv: &Move) -> Result<MoveEval, MoveError> {
    let target = mv.target_path(solution.path(mv.retailer));
    if !instance.path_eligible(&target, mv.retailer) {
        return Err(MoveError::IneligibleMove);
    }
    Ok(evaluate_reassign(
        instance,
        solution,
        mv.retailer,
        &target,
        &mv.kind().levels(),
    ))
}

/// Applies an admissible move and returns its delta.
pub fn apply_move(instance: &Instance, solution: &mut Solution, mv: &Move) -> Result<f64, MoveError> {
    let eval = delta_cost(instance, solution, mv)?;
    if !eval.admissible {
        return Err(MoveError::InadmissibleMove);
    }
    let target = mv.target_path(solution.path(mv.retailer));
    solution.reassign(instance, mv.retailer, target, eval.delta);
    Ok(eval.delta)
}

/// Random scan orders: retailers and the facilities of every level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceSet {
    pub retailers: Vec<usize>,
    facilities: [Vec<usize>; 4],
}

impl SequenceSet {
    pub fn order(&self, level: Level) -> &[usize] {
        &self.facilities[level.index()]
    }
}

pub fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

/// Independent uniform permutations of the retailers and each active level
/// (drawn in the order R, S, P, W, D).
pub fn fresh_sequences<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> SequenceSet {
    let retailers = permutation(instance.num_retailers(), rng);
    let mut facilities: [Vec<usize>; 4] = Default::default();
    for &level in instance.levels() {
        facilities[level.index()] = permutation(instance.size(level), rng);
    }
    SequenceSet { retailers, facilities }
}

/// What a scan does after applying an improving move.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    /// Keep scanning from the position after the move.
    Exhaustive,
    /// Return right after the first applied move.
    FirstImprovement,
}

/// Callbacks invoked by [`scan_type`].
pub trait ScanHooks {
    /// Called after each applied move with its (negative) delta and the
    /// number of candidates evaluated so far in this scan. `Break` stops the scan.
    fn on_applied(&mut self, solution: &Solution, delta: f64, evaluated: u64) -> ControlFlow<()>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScanOutcome {
    pub applied: usize,
    pub evaluated: u64,
    pub interrupted: bool,
}

struct Scan<'a, H: ScanHooks + ?Sized> {
    instance: &'a Instance,
    seqs: &'a SequenceSet,
    flipped: Vec<Level>,
    mode: ScanMode,
    hooks: &'a mut H,
    outcome: ScanOutcome,
}

impl<H: ScanHooks + ?Sized> Scan<'_, H> {
    fn descend(&mut self, solution: &mut Solution, r: usize, depth: usize, cand: &mut Path) -> ControlFlow<()> {
        let inst = self.instance;
        if depth == self.flipped.len() {
            let current = solution.path(r);
            if self.flipped.iter().any(|&l| current.get(l) == cand.get(l)) {
                return ControlFlow::Continue(());
            }
            self.outcome.evaluated += 1;
            let eval = evaluate_reassign(inst, solution, r, cand, &self.flipped);
            if eval.admissible && eval.delta < 0.0 {
                solution.reassign(inst, r, *cand, eval.delta);
                self.outcome.applied += 1;
                let flow = self.hooks.on_applied(solution, eval.delta, self.outcome.evaluated);
                if flow.is_break() {
                    self.outcome.interrupted = true;
                    return flow;
                }
                if self.mode == ScanMode::FirstImprovement {
                    return ControlFlow::Break(());
                }
            }
            return ControlFlow::Continue(());
        }
        let level = self.flipped[depth];
        let below_fixed = level.below().filter(|b| !self.flipped.contains(b));
        for &f in self.seqs.order(level) {
            if f == solution.path(r).get(level) {
                continue;
            }
            if let Some(a) = level.above().filter(|a| inst.has_level(*a)) {
                if inst.arc(a, cand.get(a), f) <= 0.0 {
                    continue;
                }
            }
            match level.below() {
                None => {
                    if inst.arc(level, f, r) <= 0.0 {
                        continue;
                    }
                }
                Some(_) => {
                    if let Some(b) = below_fixed {
                        if inst.arc(level, f, cand.get(b)) <= 0.0 {
                            continue;
                        }
                    }
                }
            }
            if level == Level::Plant && !inst.plant_eligible(f, r) {
                continue;
            }
            let saved = cand.get(level);
            cand.set(level, f);
            let flow = self.descend(solution, r, depth + 1, cand);
            cand.set(level, saved);
            flow?;
        }
        ControlFlow::Continue(())
    }
}

/// Scans every retailer (in sequence order) for improving, admissible k-flips
/// of type `ty`, enumerating replacement tuples along the level sequences with
/// the outermost loop on the highest flipped level.
pub fn scan_type<H: ScanHooks + ?Sized>(
    instance: &Instance,
    solution: &mut Solution,
    ty: NeighborhoodType,
    seqs: &SequenceSet,
    mode: ScanMode,
    hooks: &mut H,
) -> ScanOutcome {
    let mut scan = Scan {
        instance,
        seqs,
        flipped: ty.levels(),
        mode,
        hooks,
        outcome: ScanOutcome::default(),
    };
    for &r in &seqs.retailers {
        let mut cand = *solution.path(r);
        if scan.descend(solution, r, 0, &mut cand).is_break() {
            break;
        }
    }
    scan.outcome
}

/// Every admissible improving move of the given types, by brute force.
/// Intended for verification: the result is empty iff the solution is locally
/// optimal for those types.
pub fn improving_moves(instance: &Instance, solution: &Solution, types: &[NeighborhoodType]) -> Vec<(Move, f64)> {
    let mut found = Vec::new();
    for r in 0..instance.num_retailers() {
        let current = *solution.path(r);
        for &ty in types {
            let levels = ty.levels();
            let mut idx = vec![0usize; levels.len()];
            'tuples: loop {
                let reps: Vec<(Level, usize)> = levels.iter().copied().zip(idx.iter().copied()).collect();
                if reps.iter().all(|&(l, f)| current.get(l) != f) {
                    let mv = Move::new(instance, solution, r, &reps).expect("valid tuple");
                    if let Ok(eval) = delta_cost(instance, solution, &mv) {
                        if eval.admissible && eval.delta < 0.0 {
                            found.push((mv, eval.delta));
                        }
                    }
                }
                for pos in (0..levels.len()).rev() {
                    idx[pos] += 1;
                    if idx[pos] < instance.size(levels[pos]) {
                        continue 'tuples;
                    }
                    idx[pos] = 0;
                }
                break;
            }
        }
    }
    found
}
