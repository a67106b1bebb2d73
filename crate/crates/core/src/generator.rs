//! Seeded random instance generation over the standard benchmark grid.
//!
//! Every arc entry is eligible independently with the density probability and
//! then draws a uniform integer cost; plant-retailer eligibility uses the same
//! probability. Retailers left without a complete eligible path are repaired by
//! forcing one random chain open.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{coverage, Instance, InstanceData, InstanceMeta, Level, Matrix};

/// Identifier of the generator stream recorded in instance metadata.
pub const RNG_ALGORITHM: &str = "rand_chacha::ChaCha8Rng(seed_from_u64)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityClass {
    Low,
    Medium,
    High,
}

impl DensityClass {
    pub const ALL: [DensityClass; 3] = [DensityClass::High, DensityClass::Low, DensityClass::Medium];

    pub fn probability(self, num_levels: u8) -> f64 {
        match (num_levels, self) {
            (5, DensityClass::Low) => 0.40,
            (5, DensityClass::Medium) => 0.50,
            (5, DensityClass::High) => 0.60,
            (_, DensityClass::Low) => 0.20,
            (_, DensityClass::Medium) => 0.40,
            (_, DensityClass::High) => 0.60,
        }
    }

    /// Token used in problem identifiers.
    pub fn token(self) -> &'static str {
        match self {
            DensityClass::Low => "Ldens",
            DensityClass::Medium => "Mdens",
            DensityClass::High => "Hdens",
        }
    }

    /// Parses a problem-id token; the `*dend` spelling is accepted as an alias.
    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "Ldens" | "Ldend" => Some(DensityClass::Low),
            "Mdens" | "Mdend" => Some(DensityClass::Medium),
            "Hdens" | "Hdend" => Some(DensityClass::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DensityClass::Low => "low",
            DensityClass::Medium => "medium",
            DensityClass::High => "high",
        }
    }
}

impl fmt::Display for DensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DensityClass {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" | "l" => Ok(DensityClass::Low),
            "medium" | "med" | "m" => Ok(DensityClass::Medium),
            "high" | "h" => Ok(DensityClass::High),
            _ => DensityClass::from_token(s)
                .ok_or_else(|| GeneratorError::InvalidParams(format!("unknown density class `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedClass {
    Small,
    Medium,
    Large,
}

impl FixedClass {
    pub const ALL: [FixedClass; 3] = [FixedClass::Large, FixedClass::Medium, FixedClass::Small];

    /// Inclusive fixed-cost range for facilities at `level`.
    pub fn range(self, level: Level) -> CostRange {
        let (lo, hi) = match (self, level) {
            (FixedClass::Small, Level::Distribution) => (50, 100),
            (FixedClass::Small, Level::Warehouse) => (100, 200),
            (FixedClass::Small, Level::Plant) => (200, 400),
            (FixedClass::Small, Level::Supplier) => (20, 100),
            (FixedClass::Medium, Level::Distribution) => (100, 200),
            (FixedClass::Medium, Level::Warehouse) => (200, 400),
            (FixedClass::Medium, Level::Plant) => (400, 800),
            (FixedClass::Medium, Level::Supplier) => (50, 200),
            (FixedClass::Large, Level::Distribution) => (200, 400),
            (FixedClass::Large, Level::Warehouse) => (400, 800),
            (FixedClass::Large, Level::Plant) => (800, 1600),
            (FixedClass::Large, Level::Supplier) => (200, 400),
        };
        CostRange::new(lo, hi)
    }

    pub fn token(self) -> &'static str {
        match self {
            FixedClass::Small => "SmFx",
            FixedClass::Medium => "MedFx",
            FixedClass::Large => "LgFx",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "SmFx" => Some(FixedClass::Small),
            "MedFx" => Some(FixedClass::Medium),
            "LgFx" => Some(FixedClass::Large),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FixedClass::Small => "small",
            FixedClass::Medium => "medium",
            FixedClass::Large => "large",
        }
    }
}

impl fmt::Display for FixedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixedClass {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" | "sm" => Ok(FixedClass::Small),
            "medium" | "med" => Ok(FixedClass::Medium),
            "large" | "lg" => Ok(FixedClass::Large),
            _ => FixedClass::from_token(s)
                .ok_or_else(|| GeneratorError::InvalidParams(format!("unknown fixed-cost class `{s}`"))),
        }
    }
}

/// Number of multi-start iterations used for a density class.
pub fn max_local_for(density: DensityClass) -> usize {
    match density {
        DensityClass::Low => 70,
        DensityClass::Medium => 50,
        DensityClass::High => 30,
    }
}

/// Inclusive integer cost range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRange {
    pub lo: u32,
    pub hi: u32,
}

impl CostRange {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Self { lo, hi }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        f64::from(rng.gen_range(self.lo..=self.hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcCostRanges {
    pub dr: CostRange,
    pub wd: CostRange,
    pub pw: CostRange,
    pub sp: CostRange,
}

impl Default for ArcCostRanges {
    fn default() -> Self {
        Self {
            dr: CostRange::new(5, 50),
            wd: CostRange::new(100, 500),
            pw: CostRange::new(5, 500),
            sp: CostRange::new(5, 150),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub num_levels: u8,
    pub retailers: usize,
    pub distribution_centers: usize,
    pub warehouses: usize,
    pub plants: usize,
    pub suppliers: usize,
    pub density: DensityClass,
    pub fixed: FixedClass,
    #[serde(default)]
    pub arc_costs: ArcCostRanges,
    /// Replaces the class probability when set.
    #[serde(default)]
    pub density_override: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorParams {
    /// Grid defaults: D=150, W=50, P=30 (4-level) or 50 (5-level), S=100.
    pub fn new(num_levels: u8, retailers: usize, density: DensityClass, fixed: FixedClass, seed: u64) -> Self {
        Self {
            num_levels,
            retailers,
            distribution_centers: 150,
            warehouses: 50,
            plants: if num_levels == 5 { 50 } else { 30 },
            suppliers: if num_levels == 5 { 100 } else { 0 },
            density,
            fixed,
            arc_costs: ArcCostRanges::default(),
            density_override: None,
            seed,
        }
    }

    pub fn probability(&self) -> f64 {
        self.density_override
            .unwrap_or_else(|| self.density.probability(self.num_levels))
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidParams(m));
        if self.num_levels != 4 && self.num_levels != 5 {
            return bad(format!("num_levels must be 4 or 5, got {}", self.num_levels));
        }
        if self.retailers == 0 || self.distribution_centers == 0 || self.warehouses == 0 || self.plants == 0 {
            return bad("level sizes must be positive".into());
        }
        if self.num_levels == 5 && self.suppliers == 0 {
            return bad("5-level instances need at least one supplier".into());
        }
        let p = self.probability();
        if !(p > 0.0 && p <= 1.0) {
            return bad(format!("density {p} outside (0, 1]"));
        }
        let a = &self.arc_costs;
        for (name, r) in [("DR", a.dr), ("WD", a.wd), ("PW", a.pw), ("SP", a.sp)] {
            if r.lo == 0 || r.lo > r.hi {
                return bad(format!("arc range {name} = [{}, {}] is degenerate", r.lo, r.hi));
            }
        }
        Ok(())
    }

    /// `R-D-W-P[-S]-<Density>-<FxClass>-<replicate>`
    pub fn problem_id(&self, replicate: usize) -> String {
        let mut id = format!(
            "{}-{}-{}-{}",
            self.retailers, self.distribution_centers, self.warehouses, self.plants
        );
        if self.num_levels == 5 {
            id.push_str(&format!("-{}", self.suppliers));
        }
        format!("{id}-{}-{}-{replicate}", self.density.token(), self.fixed.token())
    }
}

/// `ceil(density * size)` clamped to `1..=size`.
pub fn upper_bound_for(density: f64, size: usize) -> usize {
    // the small slack keeps products such as 0.6 * 150 from rounding up past 90
    let raw = (density * size as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(size)
}

fn sparse_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, density: f64, range: CostRange) -> Matrix<f64> {
    let mut m = Matrix::new(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if rng.gen_bool(density) {
                m.set(i, j, range.draw(rng));
            }
        }
    }
    m
}

pub fn generate(params: &GeneratorParams) -> Result<Instance, GeneratorError> {
    params.validate()?;
    let five = params.num_levels == 5;
    let density = params.probability();
    let (r_n, d_n, w_n, p_n) = (
        params.retailers,
        params.distribution_centers,
        params.warehouses,
        params.plants,
    );
    let s_n = if five { params.suppliers } else { 0 };
    let arcs = params.arc_costs;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut cost_dr = sparse_matrix(&mut rng, d_n, r_n, density, arcs.dr);
    let mut cost_wd = sparse_matrix(&mut rng, w_n, d_n, density, arcs.wd);
    let mut cost_pw = sparse_matrix(&mut rng, p_n, w_n, density, arcs.pw);
    let mut cost_sp = sparse_matrix(&mut rng, s_n, p_n, density, arcs.sp);
    let mut elig_pr = Matrix::<u8>::new(p_n, r_n);
    for p in 0..p_n {
        for r in 0..r_n {
            if rng.gen_bool(density) {
                elig_pr.set(p, r, 1);
            }
        }
    }
    let fixed_for = |rng: &mut ChaCha8Rng, level: Level, n: usize| -> Vec<f64> {
        let range = params.fixed.range(level);
        (0..n).map(|_| range.draw(rng)).collect()
    };
    let fixed_d = fixed_for(&mut rng, Level::Distribution, d_n);
    let fixed_w = fixed_for(&mut rng, Level::Warehouse, w_n);
    let fixed_p = fixed_for(&mut rng, Level::Plant, p_n);
    let fixed_s = fixed_for(&mut rng, Level::Supplier, s_n);

    let meta = InstanceMeta {
        seed: Some(params.seed),
        density_class: Some(params.density.name().to_string()),
        fixed_class: Some(params.fixed.name().to_string()),
        density: Some(density),
        rng: Some(RNG_ALGORITHM.to_string()),
    };
    let build = |cost_dr: &Matrix<f64>,
                 cost_wd: &Matrix<f64>,
                 cost_pw: &Matrix<f64>,
                 cost_sp: &Matrix<f64>,
                 elig_pr: &Matrix<u8>| InstanceData {
        num_levels: params.num_levels,
        R: r_n,
        D: d_n,
        W: w_n,
        P: p_n,
        S: s_n,
        cost_DR: cost_dr.to_rows(),
        cost_WD: cost_wd.to_rows(),
        cost_PW: cost_pw.to_rows(),
        cost_SP: if five { cost_sp.to_rows() } else { Vec::new() },
        elig_PR: elig_pr.to_rows(),
        fixed_D: fixed_d.clone(),
        fixed_W: fixed_w.clone(),
        fixed_P: fixed_p.clone(),
        fixed_S: fixed_s.clone(),
        ub_D: upper_bound_for(density, d_n),
        ub_W: upper_bound_for(density, w_n),
        ub_P: upper_bound_for(density, p_n),
        ub_S: if five { upper_bound_for(density, s_n) } else { 0 },
        meta: meta.clone(),
    };

    // Repair. A random backbone of ub facilities per level is drawn, and each
    // retailer that the backbone cannot serve gets one forced chain inside it,
    // so a bound-feasible assignment always exists.
    let levels = crate::model::active_levels(params.num_levels).expect("validated");
    let sizes = [s_n, p_n, w_n, d_n];
    let mut backbone: [Vec<usize>; 4] = Default::default();
    let mut allowed: [Vec<bool>; 4] = Default::default();
    for &level in levels {
        let i = level.index();
        let ub = upper_bound_for(density, sizes[i]);
        backbone[i] = index::sample(&mut rng, sizes[i], ub).into_vec();
        allowed[i] = vec![false; sizes[i]];
        for &f in &backbone[i] {
            allowed[i][f] = true;
        }
    }
    let covered = coverage(
        levels,
        r_n,
        |level, upper, lower| match level {
            Level::Supplier => cost_sp.get(upper, lower),
            Level::Plant => cost_pw.get(upper, lower),
            Level::Warehouse => cost_wd.get(upper, lower),
            Level::Distribution => cost_dr.get(upper, lower),
        },
        |p, r| elig_pr.get(p, r) == 1,
        &allowed,
    );
    for r in (0..r_n).filter(|&r| !covered[r]) {
        let mut pick = |level: Level| {
            let set = &backbone[level.index()];
            if set.is_empty() {
                0
            } else {
                set[rng.gen_range(0..set.len())]
            }
        };
        let [s, p, w, d] = [
            pick(Level::Supplier),
            pick(Level::Plant),
            pick(Level::Warehouse),
            pick(Level::Distribution),
        ];
        elig_pr.set(p, r, 1);
        let mut force = |m: &mut Matrix<f64>, i: usize, j: usize, range: CostRange| {
            if m.get(i, j) <= 0.0 {
                m.set(i, j, range.draw(&mut rng));
            }
        };
        force(&mut cost_dr, d, r, arcs.dr);
        force(&mut cost_wd, w, d, arcs.wd);
        force(&mut cost_pw, p, w, arcs.pw);
        if five {
            force(&mut cost_sp, s, p, arcs.sp);
        }
    }

    let data = build(&cost_dr, &cost_wd, &cost_pw, &cost_sp, &elig_pr);
    Instance::try_from(data).map_err(|e| GeneratorError::InvalidParams(e.to_string()))
}
