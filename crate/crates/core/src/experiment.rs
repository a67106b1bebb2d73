//! Seeded experiment batches producing result tables with one row per
//! generated instance and objective/time columns per variant.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generator::{generate, max_local_for, DensityClass, FixedClass, GeneratorParams};
use crate::model::{check_feasible, Instance};
use crate::seeding::derive_seed;
use crate::vnd::{descend, multi_start, ClockKind, MoveObserver, RunOptions, SearchError, Variant};

/// One generator setting and how many instances to draw from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub params: GeneratorParams,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub cells: Vec<Cell>,
    pub variants: Vec<Variant>,
    pub master_seed: u64,
    /// Seconds per variant run, multi-start included.
    #[serde(default)]
    pub time_limit: Option<f64>,
    /// Overrides the density-based multi-start count.
    #[serde(default)]
    pub max_local: Option<usize>,
    #[serde(default)]
    pub clock: ClockKind,
    /// Run a separate multi-start for every variant instead of sharing one.
    #[serde(default)]
    pub rerun_multistart: bool,
}

impl ExperimentSpec {
    /// Every density and fixed-cost class for one size, `replicates` each.
    /// `base` supplies the sizes and cost ranges.
    pub fn grid(base: &GeneratorParams, replicates: usize, variants: Vec<Variant>, master_seed: u64) -> Self {
        let mut cells = Vec::new();
        for density in DensityClass::ALL {
            for fixed in FixedClass::ALL {
                let mut params = base.clone();
                params.density = density;
                params.fixed = fixed;
                cells.push(Cell { params, replicates });
            }
        }
        Self {
            cells,
            variants,
            master_seed,
            time_limit: None,
            max_local: None,
            clock: ClockKind::Wall,
            rerun_multistart: false,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.cells.is_empty() {
            return Err("experiment has no cells".into());
        }
        if self.variants.is_empty() {
            return Err("experiment has no variants".into());
        }
        for cell in &self.cells {
            if cell.replicates == 0 {
                return Err("replicate count must be at least 1".into());
            }
            cell.params.validate().map_err(|e| e.to_string())?;
        }
        if self.max_local == Some(0) {
            return Err("max_local must be at least 1".into());
        }
        if self.time_limit.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err("time limit must be a non-negative number of seconds".into());
        }
        Ok(())
    }

    /// `(problem_id, params with derived seed)` for every row, in id order.
    pub fn jobs(&self) -> Vec<(String, GeneratorParams)> {
        let mut jobs: Vec<(String, GeneratorParams)> = self
            .cells
            .iter()
            .flat_map(|cell| {
                (1..=cell.replicates).map(move |rep| {
                    let id = cell.params.problem_id(rep);
                    let mut params = cell.params.clone();
                    params.seed = derive_seed(self.master_seed, &[&id, "instance"]);
                    (id, params)
                })
            })
            .collect();
        jobs.sort_by(|a, b| a.0.cmp(&b.0));
        jobs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub objective: f64,
    pub time_to_best: f64,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem_id: String,
    pub outcomes: BTreeMap<Variant, VariantOutcome>,
    /// `ok`, or a short failure marker.
    pub status: String,
}

/// Solves one generated instance with every requested variant.
pub fn run_instance(
    spec: &ExperimentSpec,
    problem_id: &str,
    instance: &Instance,
    max_local: usize,
    observer: Option<&dyn MoveObserver>,
) -> Result<BTreeMap<Variant, VariantOutcome>, SearchError> {
    let limit = spec.time_limit.map(Duration::from_secs_f64);
    let opts_now = || RunOptions {
        clock: spec.clock,
        deadline: limit.map(|t| Instant::now() + t),
        record_trace: false,
        observer,
    };
    let shared = if spec.rerun_multistart {
        None
    } else {
        let seed = derive_seed(spec.master_seed, &[problem_id, "multistart"]);
        Some(multi_start(instance, max_local, seed, &opts_now())?)
    };
    let mut outcomes = BTreeMap::new();
    for &variant in &spec.variants {
        let opts = opts_now();
        let ms = match &shared {
            Some(ms) => ms.clone(),
            None => {
                let seed = derive_seed(spec.master_seed, &[problem_id, variant.name(), "multistart"]);
                multi_start(instance, max_local, seed, &opts)?
            }
        };
        let seed = derive_seed(spec.master_seed, &[problem_id, variant.name()]);
        let (solution, trace) = descend(instance, ms.solution, variant, seed, ms.elapsed, &opts);
        if !check_feasible(instance, &solution).is_empty() {
            return Err(SearchError::InvalidConfig(format!("{variant} produced an infeasible solution")));
        }
        outcomes.insert(
            variant,
            VariantOutcome {
                objective: solution.objective(),
                time_to_best: trace.time_to_best,
                truncated: trace.truncated,
            },
        );
    }
    Ok(outcomes)
}

/// Runs every row of the experiment, rows in parallel. Failed rows carry a
/// status marker instead of numbers; the batch continues.
pub fn run_batch(spec: &ExperimentSpec, observer: Option<&dyn MoveObserver>) -> Vec<ResultRow> {
    spec.jobs()
        .into_par_iter()
        .map(|(problem_id, params)| {
            let max_local = spec.max_local.unwrap_or_else(|| max_local_for(params.density));
            let result = generate(&params)
                .map_err(|e| format!("generate_failed: {e}"))
                .and_then(|inst| {
                    run_instance(spec, &problem_id, &inst, max_local, observer).map_err(|e| match e {
                        SearchError::ConstructionFailed { .. } => "construction_failed".to_string(),
                        other => format!("search_failed: {other}"),
                    })
                });
            match result {
                Ok(outcomes) => ResultRow {
                    problem_id,
                    outcomes,
                    status: "ok".into(),
                },
                Err(status) => ResultRow {
                    problem_id,
                    outcomes: BTreeMap::new(),
                    status,
                },
            }
        })
        .collect()
}

/// `problem_id, <V>_ofv..., <V>_time..., status`.
pub fn write_csv<W: Write>(rows: &[ResultRow], variants: &[Variant], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["problem_id".to_string()];
    header.extend(variants.iter().map(|v| format!("{}_ofv", v.label())));
    header.extend(variants.iter().map(|v| format!("{}_time", v.label())));
    header.push("status".into());
    wtr.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.problem_id.clone()];
        let cell = |f: fn(&VariantOutcome) -> f64, v: &Variant| {
            row.outcomes.get(v).map(|o| f(o).to_string()).unwrap_or_default()
        };
        rec.extend(variants.iter().map(|v| cell(|o| o.objective, v)));
        rec.extend(variants.iter().map(|v| cell(|o| o.time_to_best, v)));
        rec.push(row.status.clone());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
