//! Problem instances, solutions, feasibility rules and full objective
//! evaluation for the single-assignment multi-level facility location problem.
//!
//! A retailer is served along one path `(s, p, w, d)` (suppliers only exist in
//! 5-level instances). Each arc matrix stores a positive per-retailer shipping
//! cost for eligible arcs and `0` for ineligible ones. Facilities are charged
//! their fixed cost iff at least one path uses them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Facility levels above the retailers, ordered from the top of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Supplier,
    Plant,
    Warehouse,
    Distribution,
}

impl Level {
    pub const ALL: [Level; 4] = [
        Level::Supplier,
        Level::Plant,
        Level::Warehouse,
        Level::Distribution,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn symbol(self) -> &'static str {
        match self {
            Level::Supplier => "S",
            Level::Plant => "P",
            Level::Warehouse => "W",
            Level::Distribution => "D",
        }
    }

    /// The level directly below, or `None` for distribution centers (whose
    /// downstream nodes are the retailers).
    #[inline]
    pub const fn below(self) -> Option<Level> {
        match self {
            Level::Supplier => Some(Level::Plant),
            Level::Plant => Some(Level::Warehouse),
            Level::Warehouse => Some(Level::Distribution),
            Level::Distribution => None,
        }
    }

    #[inline]
    pub const fn above(self) -> Option<Level> {
        match self {
            Level::Supplier => None,
            Level::Plant => Some(Level::Supplier),
            Level::Warehouse => Some(Level::Plant),
            Level::Distribution => Some(Level::Warehouse),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

const FOUR_LEVEL: [Level; 3] = [Level::Plant, Level::Warehouse, Level::Distribution];

/// Active facility levels for a given level count, top first.
pub fn active_levels(num_levels: u8) -> Result<&'static [Level], ModelError> {
    match num_levels {
        4 => Ok(&FOUR_LEVEL),
        5 => Ok(&Level::ALL),
        n => Err(ModelError::UnsupportedLevelCount(n)),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unsupported level count {0} (expected 4 or 5)")]
    UnsupportedLevelCount(u8),
    #[error("{level} index {index} out of range (size {size})")]
    IndexOutOfRange { level: Level, index: usize, size: usize },
    #[error("expected {expected} paths, got {actual}")]
    PathCount { expected: usize, actual: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("retailers without any fully eligible path: {0:?}")]
    NoFeasiblePath(Vec<usize>),
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> Matrix<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>], cols: usize) -> Result<Self, ModelError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(ModelError::InvalidInstance(format!(
                    "matrix row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        if self.cols == 0 {
            return vec![Vec::new(); self.rows];
        }
        self.data.chunks(self.cols).map(<[T]>::to_vec).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Provenance recorded alongside generated instances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub density_class: Option<String>,
    #[serde(default)]
    pub fixed_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

/// Serialized instance layout. Matrices are arrays of rows; eligibility is 0/1.
#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceData {
    pub num_levels: u8,
    pub R: usize,
    pub D: usize,
    pub W: usize,
    pub P: usize,
    #[serde(default)]
    pub S: usize,
    pub cost_DR: Vec<Vec<f64>>,
    pub cost_WD: Vec<Vec<f64>>,
    pub cost_PW: Vec<Vec<f64>>,
    #[serde(default)]
    pub cost_SP: Vec<Vec<f64>>,
    pub elig_PR: Vec<Vec<u8>>,
    pub fixed_D: Vec<f64>,
    pub fixed_W: Vec<f64>,
    pub fixed_P: Vec<f64>,
    #[serde(default)]
    pub fixed_S: Vec<f64>,
    pub ub_D: usize,
    pub ub_W: usize,
    pub ub_P: usize,
    #[serde(default)]
    pub ub_S: usize,
    #[serde(default)]
    pub meta: InstanceMeta,
}

/// Immutable, validated problem data.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    num_levels: u8,
    levels: &'static [Level],
    retailers: usize,
    sizes: [usize; 4],
    /// Arc costs keyed by the upstream level: S→P, P→W, W→D, D→R.
    arcs: [Matrix<f64>; 4],
    elig_pr: Matrix<bool>,
    fixed: [Vec<f64>; 4],
    upper_bounds: [usize; 4],
    meta: InstanceMeta,
}

impl Instance {
    pub fn num_levels(&self) -> u8 {
        self.num_levels
    }

    /// Active facility levels, top first.
    pub fn levels(&self) -> &'static [Level] {
        self.levels
    }

    pub fn num_retailers(&self) -> usize {
        self.retailers
    }

    pub fn size(&self, level: Level) -> usize {
        self.sizes[level.index()]
    }

    pub fn fixed_cost(&self, level: Level, facility: usize) -> f64 {
        self.fixed[level.index()][facility]
    }

    pub fn fixed_costs(&self, level: Level) -> &[f64] {
        &self.fixed[level.index()]
    }

    pub fn upper_bound(&self, level: Level) -> usize {
        self.upper_bounds[level.index()]
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn has_level(&self, level: Level) -> bool {
        self.levels.contains(&level)
    }

    /// Arc matrix leaving `from` (rows index `from`, columns the level below or retailers).
    pub fn arc_matrix(&self, from: Level) -> &Matrix<f64> {
        &self.arcs[from.index()]
    }

    /// Cost of the arc from facility `upper` at `from` to node `lower` one level
    /// down (a retailer when `from` is a distribution center). Zero means ineligible.
    #[inline]
    pub fn arc(&self, from: Level, upper: usize, lower: usize) -> f64 {
        self.arcs[from.index()].get(upper, lower)
    }

    #[inline]
    pub fn plant_eligible(&self, plant: usize, retailer: usize) -> bool {
        self.elig_pr.get(plant, retailer)
    }

    /// Sum of arc costs along `path` to `retailer`, ignoring eligibility.
    pub fn path_arc_cost(&self, path: &Path, retailer: usize) -> f64 {
        let mut cost = 0.0;
        for &level in self.levels {
            let lower = match level.below() {
                Some(b) => path.get(b),
                None => retailer,
            };
            cost += self.arc(level, path.get(level), lower);
        }
        cost
    }

    /// True iff every arc on the path is positive and the plant may serve the retailer.
    pub fn path_eligible(&self, path: &Path, retailer: usize) -> bool {
        self.levels.iter().all(|&level| {
            let lower = match level.below() {
                Some(b) => path.get(b),
                None => retailer,
            };
            self.arc(level, path.get(level), lower) > 0.0
        }) && self.plant_eligible(path.get(Level::Plant), retailer)
    }

    fn check_path_indices(&self, path: &Path) -> Result<(), ModelError> {
        for &level in self.levels {
            let size = self.size(level);
            if path.get(level) >= size {
                return Err(ModelError::IndexOutOfRange {
                    level,
                    index: path.get(level),
                    size,
                });
            }
        }
        Ok(())
    }

    /// Which retailers can be served using only the facilities marked in
    /// `allowed` (indexed by level, then facility).
    pub fn covered_retailers(&self, allowed: &[Vec<bool>; 4]) -> Vec<bool> {
        coverage(
            self.levels,
            self.retailers,
            |level, upper, lower| self.arc(level, upper, lower),
            |p, r| self.plant_eligible(p, r),
            allowed,
        )
    }

    /// Per-facility retailer sets, see [`Instance::covered_retailers`].
    pub fn downward_reach(&self, allowed: &[Vec<bool>; 4]) -> [Vec<RetailerSet>; 4] {
        downward_reach(
            self.levels,
            self.retailers,
            |level, upper, lower| self.arc(level, upper, lower),
            |p, r| self.plant_eligible(p, r),
            allowed,
        )
    }

    /// Retailers that have no fully eligible path at all.
    pub fn retailers_without_path(&self) -> Vec<usize> {
        let top_plants: Vec<bool> = (0..self.size(Level::Plant))
            .map(|p| {
                !self.has_level(Level::Supplier)
                    || (0..self.size(Level::Supplier)).any(|s| self.arc(Level::Supplier, s, p) > 0.0)
            })
            .collect();
        let mut missing = Vec::new();
        let mut wh = vec![false; self.size(Level::Warehouse)];
        for r in 0..self.retailers {
            wh.iter_mut().for_each(|x| *x = false);
            for p in (0..self.size(Level::Plant)).filter(|&p| top_plants[p] && self.plant_eligible(p, r)) {
                for (w, reach) in wh.iter_mut().enumerate() {
                    if self.arc(Level::Plant, p, w) > 0.0 {
                        *reach = true;
                    }
                }
            }
            let ok = (0..self.size(Level::Distribution)).any(|d| {
                self.arc(Level::Distribution, d, r) > 0.0
                    && wh
                        .iter()
                        .enumerate()
                        .any(|(w, &reach)| reach && self.arc(Level::Warehouse, w, d) > 0.0)
            });
            if !ok {
                missing.push(r);
            }
        }
        missing
    }

    pub fn to_data(&self) -> InstanceData {
        let five = self.num_levels == 5;
        InstanceData {
            num_levels: self.num_levels,
            R: self.retailers,
            D: self.size(Level::Distribution),
            W: self.size(Level::Warehouse),
            P: self.size(Level::Plant),
            S: self.size(Level::Supplier),
            cost_DR: self.arcs[Level::Distribution.index()].to_rows(),
            cost_WD: self.arcs[Level::Warehouse.index()].to_rows(),
            cost_PW: self.arcs[Level::Plant.index()].to_rows(),
            cost_SP: if five {
                self.arcs[Level::Supplier.index()].to_rows()
            } else {
                Vec::new()
            },
            elig_PR: self
                .elig_pr
                .to_rows()
                .into_iter()
                .map(|row| row.into_iter().map(u8::from).collect())
                .collect(),
            fixed_D: self.fixed[Level::Distribution.index()].clone(),
            fixed_W: self.fixed[Level::Warehouse.index()].clone(),
            fixed_P: self.fixed[Level::Plant.index()].clone(),
            fixed_S: self.fixed[Level::Supplier.index()].clone(),
            ub_D: self.upper_bound(Level::Distribution),
            ub_W: self.upper_bound(Level::Warehouse),
            ub_P: self.upper_bound(Level::Plant),
            ub_S: self.upper_bound(Level::Supplier),
            meta: self.meta.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_data()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let data: InstanceData =
            serde_json::from_str(text).map_err(|e| ModelError::InvalidInstance(e.to_string()))?;
        Instance::try_from(data)
    }
}

/// Retailer bitset (64 retailers per word).
pub type RetailerSet = Vec<u64>;

/// For every facility in `allowed`, the retailers it can reach downwards
/// along eligible arcs through allowed facilities (a plant only keeps the
/// retailers it may serve). Indexed by level, then facility; excluded
/// facilities get empty sets. `arc(level, upper, lower)` is the cost leaving
/// `level`; at the distribution level `lower` is a retailer.
pub(crate) fn downward_reach(
    levels: &[Level],
    retailers: usize,
    arc: impl Fn(Level, usize, usize) -> f64,
    plant_ok: impl Fn(usize, usize) -> bool,
    allowed: &[Vec<bool>; 4],
) -> [Vec<RetailerSet>; 4] {
    let words = retailers.div_ceil(64);
    let mut out: [Vec<RetailerSet>; 4] = Default::default();
    for &level in levels.iter().rev() {
        let mask = &allowed[level.index()];
        let mut reach = vec![vec![0u64; words]; mask.len()];
        for (f, bits) in reach.iter_mut().enumerate() {
            if !mask[f] {
                continue;
            }
            match level.below() {
                None => {
                    for r in 0..retailers {
                        if arc(level, f, r) > 0.0 {
                            bits[r / 64] |= 1 << (r % 64);
                        }
                    }
                }
                Some(b) => {
                    for (g, lower) in out[b.index()].iter().enumerate() {
                        if arc(level, f, g) > 0.0 {
                            for (a, w) in bits.iter_mut().zip(lower) {
                                *a |= w;
                            }
                        }
                    }
                }
            }
            if level == Level::Plant {
                for r in 0..retailers {
                    if !plant_ok(f, r) {
                        bits[r / 64] &= !(1 << (r % 64));
                    }
                }
            }
        }
        out[level.index()] = reach;
    }
    out
}

pub(crate) fn coverage(
    levels: &[Level],
    retailers: usize,
    arc: impl Fn(Level, usize, usize) -> f64,
    plant_ok: impl Fn(usize, usize) -> bool,
    allowed: &[Vec<bool>; 4],
) -> Vec<bool> {
    let reach = downward_reach(levels, retailers, arc, plant_ok, allowed);
    let mut covered = vec![0u64; retailers.div_ceil(64)];
    for bits in &reach[levels[0].index()] {
        for (a, b) in covered.iter_mut().zip(bits) {
            *a |= b;
        }
    }
    (0..retailers).map(|r| covered[r / 64] >> (r % 64) & 1 == 1).collect()
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidInstance(msg.into())
}

fn check_costs(name: &str, values: &[f64]) -> Result<(), ModelError> {
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(invalid(format!("{name} contains invalid cost {v}")));
    }
    Ok(())
}

impl TryFrom<InstanceData> for Instance {
    type Error = ModelError;

    fn try_from(data: InstanceData) -> Result<Self, Self::Error> {
        let levels = active_levels(data.num_levels)?;
        let five = data.num_levels == 5;
        let s = if five { data.S } else { 0 };
        if data.R == 0 || data.D == 0 || data.W == 0 || data.P == 0 || (five && s == 0) {
            return Err(invalid("level sizes must be positive"));
        }
        if !five && (data.S != 0 || !data.cost_SP.is_empty() || !data.fixed_S.is_empty() || data.ub_S != 0) {
            return Err(invalid("4-level instance carries supplier data"));
        }
        let sizes = [s, data.P, data.W, data.D];

        let shape = |name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize| {
            if rows.len() != nrows {
                return Err(invalid(format!("{name} has {} rows, expected {nrows}", rows.len())));
            }
            let m = Matrix::from_rows(rows, ncols)?;
            check_costs(name, m.as_slice())?;
            Ok(m)
        };
        let cost_sp = if five {
            shape("cost_SP", &data.cost_SP, s, data.P)?
        } else {
            Matrix::new(0, 0)
        };
        let cost_pw = shape("cost_PW", &data.cost_PW, data.P, data.W)?;
        let cost_wd = shape("cost_WD", &data.cost_WD, data.W, data.D)?;
        let cost_dr = shape("cost_DR", &data.cost_DR, data.D, data.R)?;

        if data.elig_PR.len() != data.P {
            return Err(invalid(format!("elig_PR has {} rows, expected {}", data.elig_PR.len(), data.P)));
        }
        let mut elig_pr = Matrix::new(data.P, data.R);
        for (p, row) in data.elig_PR.iter().enumerate() {
            if row.len() != data.R {
                return Err(invalid(format!("elig_PR row {p} has wrong length")));
            }
            for (r, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => elig_pr.set(p, r, true),
                    other => return Err(invalid(format!("elig_PR entry {other} is not binary"))),
                }
            }
        }

        let fixed = [
            if five { data.fixed_S } else { Vec::new() },
            data.fixed_P,
            data.fixed_W,
            data.fixed_D,
        ];
        let ubs = [if five { data.ub_S } else { 0 }, data.ub_P, data.ub_W, data.ub_D];
        for &level in levels {
            let i = level.index();
            if fixed[i].len() != sizes[i] {
                return Err(invalid(format!("fixed_{level} has {} entries, expected {}", fixed[i].len(), sizes[i])));
            }
            check_costs(&format!("fixed_{level}"), &fixed[i])?;
            if ubs[i] < 1 || ubs[i] > sizes[i] {
                return Err(invalid(format!("ub_{level} = {} outside 1..={}", ubs[i], sizes[i])));
            }
        }

        let instance = Instance {
            num_levels: data.num_levels,
            levels,
            retailers: data.R,
            sizes,
            arcs: [cost_sp, cost_pw, cost_wd, cost_dr],
            elig_pr,
            fixed,
            upper_bounds: ubs,
            meta: data.meta,
        };
        let missing = instance.retailers_without_path();
        if !missing.is_empty() {
            return Err(ModelError::NoFeasiblePath(missing));
        }
        Ok(instance)
    }
}

/// One retailer's serving path: a facility index per level. The supplier slot
/// is unused (zero) in 4-level instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Path([usize; 4]);

impl Path {
    pub fn new(supplier: usize, plant: usize, warehouse: usize, distribution: usize) -> Self {
        Path([supplier, plant, warehouse, distribution])
    }

    /// 4-level path `(p, w, d)`.
    pub fn four(plant: usize, warehouse: usize, distribution: usize) -> Self {
        Path([0, plant, warehouse, distribution])
    }

    #[inline]
    pub fn get(&self, level: Level) -> usize {
        self.0[level.index()]
    }

    #[inline]
    pub fn set(&mut self, level: Level, facility: usize) {
        self.0[level.index()] = facility;
    }

    /// Indices of the active levels, top first.
    pub fn to_vec(&self, levels: &[Level]) -> Vec<usize> {
        levels.iter().map(|&l| self.get(l)).collect()
    }

    pub fn from_slice(levels: &[Level], nodes: &[usize]) -> Option<Self> {
        if nodes.len() != levels.len() {
            return None;
        }
        let mut path = Path::default();
        for (&l, &n) in levels.iter().zip(nodes) {
            path.set(l, n);
        }
        Some(path)
    }
}

/// Total cost of a path assignment: arc costs of every path plus fixed costs of
/// each facility used by at least one path.
pub fn evaluate_full(instance: &Instance, paths: &[Path]) -> Result<f64, ModelError> {
    if paths.len() != instance.num_retailers() {
        return Err(ModelError::PathCount {
            expected: instance.num_retailers(),
            actual: paths.len(),
        });
    }
    let mut used: [Vec<bool>; 4] = Default::default();
    for &level in instance.levels() {
        used[level.index()] = vec![false; instance.size(level)];
    }
    let mut total = 0.0;
    for (r, path) in paths.iter().enumerate() {
        instance.check_path_indices(path)?;
        total += instance.path_arc_cost(path, r);
        for &level in instance.levels() {
            used[level.index()][path.get(level)] = true;
        }
    }
    for &level in instance.levels() {
        for (f, _) in used[level.index()].iter().enumerate().filter(|(_, u)| **u) {
            total += instance.fixed_cost(level, f);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// The arc leaving `from` on the retailer's path has zero cost.
    IneligibleArc { retailer: usize, from: Level },
    PlantIneligible { retailer: usize, plant: usize },
    OpenBoundExceeded { level: Level, open: usize, bound: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IneligibleArc { retailer, from } => {
                write!(f, "retailer {retailer}: ineligible arc leaving level {from}")
            }
            Violation::PlantIneligible { retailer, plant } => {
                write!(f, "retailer {retailer}: plant {plant} not eligible")
            }
            Violation::OpenBoundExceeded { level, open, bound } => {
                write!(f, "level {level}: {open} open facilities exceed bound {bound}")
            }
        }
    }
}

/// Feasibility violations of a solution, recounted from its paths.
///
/// Per-retailer violations come first in retailer order (arcs top-down, then
/// plant eligibility), followed by bound violations in level order.
pub fn check_feasible(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    check_paths(instance, solution.paths())
}

pub(crate) fn check_paths(instance: &Instance, paths: &[Path]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (r, path) in paths.iter().enumerate() {
        for &level in instance.levels() {
            let lower = match level.below() {
                Some(b) => path.get(b),
                None => r,
            };
            if instance.arc(level, path.get(level), lower) <= 0.0 {
                out.push(Violation::IneligibleArc { retailer: r, from: level });
            }
        }
        let plant = path.get(Level::Plant);
        if !instance.plant_eligible(plant, r) {
            out.push(Violation::PlantIneligible { retailer: r, plant });
        }
    }
    for &level in instance.levels() {
        let mut seen = vec![false; instance.size(level)];
        paths.iter().for_each(|p| seen[p.get(level)] = true);
        let open = seen.iter().filter(|&&s| s).count();
        let bound = instance.upper_bound(level);
        if open > bound {
            out.push(Violation::OpenBoundExceeded { level, open, bound });
        }
    }
    out
}

/// A complete assignment with usage counters and a cached objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    paths: Vec<Path>,
    usage: [Vec<u32>; 4],
    open: [usize; 4],
    objective: f64,
}

impl Solution {
    /// Builds counters, open counts and the objective from scratch.
    pub fn from_paths(instance: &Instance, paths: Vec<Path>) -> Result<Self, ModelError> {
        if paths.len() != instance.num_retailers() {
            return Err(ModelError::PathCount {
                expected: instance.num_retailers(),
                actual: paths.len(),
            });
        }
        let mut usage: [Vec<u32>; 4] = Default::default();
        for &level in instance.levels() {
            usage[level.index()] = vec![0; instance.size(level)];
        }
        let mut objective = 0.0;
        for (r, path) in paths.iter().enumerate() {
            instance.check_path_indices(path)?;
            objective += instance.path_arc_cost(path, r);
            for &level in instance.levels() {
                usage[level.index()][path.get(level)] += 1;
            }
        }
        let mut open = [0; 4];
        for &level in instance.levels() {
            for (f, &u) in usage[level.index()].iter().enumerate() {
                if u > 0 {
                    open[level.index()] += 1;
                    objective += instance.fixed_cost(level, f);
                }
            }
        }
        Ok(Solution {
            paths,
            usage,
            open,
            objective,
        })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, retailer: usize) -> &Path {
        &self.paths[retailer]
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn usage(&self, level: Level, facility: usize) -> u32 {
        self.usage[level.index()][facility]
    }

    pub fn usage_counts(&self, level: Level) -> &[u32] {
        &self.usage[level.index()]
    }

    pub fn is_open(&self, level: Level, facility: usize) -> bool {
        self.usage(level, facility) > 0
    }

    pub fn open_count(&self, level: Level) -> usize {
        self.open[level.index()]
    }

    /// Compares counters and objective against a fresh rebuild.
    pub fn is_consistent(&self, instance: &Instance) -> bool {
        let Ok(fresh) = Solution::from_paths(instance, self.paths.clone()) else {
            return false;
        };
        let scale = fresh.objective.abs().max(1.0);
        fresh.usage == self.usage
            && fresh.open == self.open
            && (fresh.objective - self.objective).abs() <= 1e-9 * scale
    }

    /// Reassigns one retailer's path, keeping counters and the objective current.
    /// `delta` is the already computed objective change.
    pub(crate) fn reassign(&mut self, instance: &Instance, retailer: usize, new_path: Path, delta: f64) {
        let old = self.paths[retailer];
        for &level in instance.levels() {
            let (from, to) = (old.get(level), new_path.get(level));
            if from == to {
                continue;
            }
            let usage = &mut self.usage[level.index()];
            usage[from] -= 1;
            if usage[from] == 0 {
                self.open[level.index()] -= 1;
            }
            if usage[to] == 0 {
                self.open[level.index()] += 1;
            }
            usage[to] += 1;
        }
        self.paths[retailer] = new_path;
        self.objective += delta;
    }

    /// `{paths: [[s,p,w,d], ...], objective}`; 4-level paths omit the supplier.
    pub fn to_json(&self, instance: &Instance) -> serde_json::Value {
        let paths: Vec<Vec<usize>> = self.paths.iter().map(|p| p.to_vec(instance.levels())).collect();
        serde_json::json!({ "paths": paths, "objective": self.objective })
    }

    pub fn from_json(instance: &Instance, value: &serde_json::Value) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        struct Raw {
            paths: Vec<Vec<usize>>,
        }
        let raw: Raw = serde_json::from_value(value.clone()).map_err(|e| invalid(e.to_string()))?;
        let paths = raw
            .paths
            .iter()
            .map(|nodes| Path::from_slice(instance.levels(), nodes).ok_or_else(|| invalid("path has wrong length")))
            .collect::<Result<Vec<_>, _>>()?;
        Solution::from_paths(instance, paths)
    }
}
