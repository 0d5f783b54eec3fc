use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::world::{synth_world, WorldSpec};
use crate::analysis::resolution_rate;
use crate::backend::{generate_references, ReferenceConfig, StubBackend};
use crate::beliefnet::{build_examples, train, BeliefNet, NetDims, TrainConfig};
use crate::data::io::{create, write_json};
use crate::decision::{personalized_decision, BlenderConfig};
use crate::error::{Error, Result};
use crate::population::sample_profiles;
use crate::rng::{derive_seed, str_tag};

const WORLD_STREAM: u64 = 0x5745;
const CELL_STREAM: u64 = 0x4345;
const VIRTUAL_STREAM: u64 = 7;
const INIT_STREAM: u64 = 8;

/// Hidden sizes of the belief net trained in each cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSizes {
    pub embed: usize,
    pub hidden: usize,
    pub d_delta: usize,
}

impl Default for NetSizes {
    fn default() -> Self {
        NetSizes {
            embed: NetDims::DEFAULT_WIDTH,
            hidden: NetDims::DEFAULT_WIDTH,
            d_delta: NetDims::DEFAULT_BELIEF_DIM,
        }
    }
}

/// Factorial simulation design. Cells are the Cartesian product of the four
/// grids; each is repeated `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_workers: Vec<usize>,
    pub tasks_per_worker: Vec<usize>,
    pub sigma_resp: Vec<f64>,
    pub eps_div: Vec<f64>,
    pub repetitions: usize,
    pub test_virtual_workers: usize,
    pub seed: u64,
    /// Ground-truth model; its grid-controlled fields are overridden per cell.
    pub world: WorldSpec,
    pub net: NetSizes,
    pub train: TrainConfig,
    pub blender: BlenderConfig,
    pub reference: ReferenceConfig,
    pub resolution_threshold: f64,
    pub parallelism: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_workers: vec![2, 5, 10, 20],
            tasks_per_worker: vec![5, 10],
            sigma_resp: vec![0.0, 1.0, 2.0],
            eps_div: vec![0.0, 1.0, 2.0],
            repetitions: 10,
            test_virtual_workers: 20,
            seed: 0,
            world: WorldSpec::default(),
            net: NetSizes::default(),
            train: TrainConfig::default(),
            blender: BlenderConfig::default(),
            reference: ReferenceConfig::default(),
            resolution_threshold: 0.5,
            parallelism: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_workers.is_empty()
            || self.tasks_per_worker.is_empty()
            || self.sigma_resp.is_empty()
            || self.eps_div.is_empty()
        {
            return Err(Error::InvalidArgument(
                "every sweep grid must be nonempty".into(),
            ));
        }
        if self.repetitions == 0 || self.test_virtual_workers == 0 || self.parallelism == 0 {
            return Err(Error::InvalidArgument(
                "repetitions, test_virtual_workers and parallelism must be >= 1".into(),
            ));
        }
        if self.n_workers.contains(&0) {
            return Err(Error::InvalidArgument(
                "n_workers entries must be >= 1".into(),
            ));
        }
        self.train.validate()?;
        self.blender.validate()?;
        for cell in self.cells() {
            self.world_for(&cell).validate()?;
        }
        Ok(())
    }

    /// Cells in row-major order over (n_workers, tasks_per_worker, sigma_resp, eps_div).
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n_workers in &self.n_workers {
            for &tasks_per_worker in &self.tasks_per_worker {
                for &sigma_resp in &self.sigma_resp {
                    for &eps_div in &self.eps_div {
                        out.push(Cell {
                            n_workers,
                            tasks_per_worker,
                            sigma_resp,
                            eps_div,
                        });
                    }
                }
            }
        }
        out
    }

    fn world_for(&self, cell: &Cell) -> WorldSpec {
        WorldSpec {
            n_workers: cell.n_workers,
            tasks_per_worker: cell.tasks_per_worker,
            sigma_resp: cell.sigma_resp,
            eps_div: cell.eps_div,
            ..self.world.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n_workers: usize,
    pub tasks_per_worker: usize,
    pub sigma_resp: f64,
    pub eps_div: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepResult {
    pub rep: usize,
    /// Seed of the shared world of this repetition.
    pub world_seed: u64,
    /// Seed of this cell's training and evaluation streams.
    pub seed: u64,
    pub mae: Option<f64>,
    /// Resolution rate using the first `k` virtual workers, `k = 1..=V`.
    pub resolution: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub seed: u64,
    pub reps: Vec<RepResult>,
    /// Over successful repetitions.
    pub mean_mae: Option<f64>,
    pub std_mae: Option<f64>,
    pub resolution_curve: Option<Vec<f64>>,
    /// Some repetition failed.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SimConfig,
    pub cells: Vec<CellResult>,
}

struct Outcome {
    mae: f64,
    resolution: Vec<f64>,
}

fn run_replicate(cfg: &SimConfig, cell: &Cell, world_seed: u64, seed: u64) -> Result<Outcome> {
    let world = synth_world(&cfg.world_for(cell), world_seed)?;
    let stub = StubBackend::new(world.oracle.clone())?;
    let y_ref = generate_references(&world.problems, &stub, None, &cfg.reference, world_seed, 1)?;

    let train_problems = world.problems.select(&world.train_ids)?;
    let d_z = cfg.world.profile_spec.encoded_dim();
    let dims = NetDims::new(cfg.world.feature_dim, d_z, 1).with_sizes(
        cfg.net.embed,
        cfg.net.hidden,
        cfg.net.d_delta,
    );
    let mut net = BeliefNet::new(dims, derive_seed(world_seed, &[INIT_STREAM]))?;
    let examples = build_examples(
        &train_problems,
        &world.responses,
        &world.profiles,
        &y_ref,
        1,
    )?;
    let tcfg = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    train(&mut net, &examples, &tcfg)?;

    let virtual_workers = sample_profiles(
        &cfg.world.profile_spec,
        cfg.test_virtual_workers,
        derive_seed(world_seed, &[VIRTUAL_STREAM]),
    )?;
    let v = virtual_workers.len();
    let mut errors_by_k = vec![Vec::with_capacity(world.test_ids.len()); v];
    for id in &world.test_ids {
        let problem = world.problems.get(id).expect("test id from world");
        let mut sum = 0.0;
        for (k, profile) in virtual_workers.iter().enumerate() {
            let s = derive_seed(seed, &[str_tag(id), k as u64]);
            sum += personalized_decision(&net, problem, profile, y_ref[id], &cfg.blender, s)?;
            errors_by_k[k].push((sum / (k + 1) as f64 - world.truth[id]).abs());
        }
    }
    let resolution = errors_by_k
        .iter()
        .map(|e| resolution_rate(e, cfg.resolution_threshold))
        .collect::<Result<Vec<_>>>()?;
    let last = &errors_by_k[v - 1];
    Ok(Outcome {
        mae: last.iter().sum::<f64>() / last.len() as f64,
        resolution,
    })
}

/// Run every (cell, repetition) pair. Repetition `r` shares one world (and
/// belief-net initialization) across cells; cell `c` draws its training and
/// evaluation noise from a seed derived from `(seed, c)`. Results do not
/// depend on `parallelism`. Failed repetitions are recorded, not propagated.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r)))
        .collect();
    let cell_seed = |c: usize| derive_seed(cfg.seed, &[CELL_STREAM, c as u64]);
    let run = |&(c, r): &(usize, usize)| -> RepResult {
        let world_seed = derive_seed(cfg.seed, &[WORLD_STREAM, r as u64]);
        let seed = derive_seed(cell_seed(c), &[r as u64]);
        match run_replicate(cfg, &cells[c], world_seed, seed) {
            Ok(o) => RepResult {
                rep: r,
                world_seed,
                seed,
                mae: Some(o.mae),
                resolution: Some(o.resolution),
                error: None,
            },
            Err(e) => RepResult {
                rep: r,
                world_seed,
                seed,
                mae: None,
                resolution: None,
                error: Some(e.to_string()),
            },
        }
    };
    let reps: Vec<RepResult> = if cfg.parallelism > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(|| jobs.par_iter().map(run).collect())
    } else {
        jobs.iter().map(run).collect()
    };

    let mut reps = reps.into_iter();
    let cells = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let reps: Vec<RepResult> = reps.by_ref().take(cfg.repetitions).collect();
            summarize(*cell, cell_seed(c), reps)
        })
        .collect();
    Ok(SweepResult {
        config: cfg.clone(),
        cells,
    })
}

fn summarize(cell: Cell, seed: u64, reps: Vec<RepResult>) -> CellResult {
    let maes: Vec<f64> = reps.iter().filter_map(|r| r.mae).collect();
    let curves: Vec<&Vec<f64>> = reps.iter().filter_map(|r| r.resolution.as_ref()).collect();
    let n = maes.len() as f64;
    let mean_mae = (!maes.is_empty()).then(|| maes.iter().sum::<f64>() / n);
    let std_mae = mean_mae.map(|m| {
        if maes.len() < 2 {
            0.0
        } else {
            (maes.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        }
    });
    let resolution_curve = curves.first().map(|first| {
        (0..first.len())
            .map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / curves.len() as f64)
            .collect()
    });
    CellResult {
        cell,
        seed,
        failed: reps.iter().any(|r| r.error.is_some()),
        reps,
        mean_mae,
        std_mae,
        resolution_curve,
    }
}

impl SweepResult {
    pub fn cell(
        &self,
        n_workers: usize,
        tasks_per_worker: usize,
        sigma_resp: f64,
        eps_div: f64,
    ) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.cell.n_workers == n_workers
                && c.cell.tasks_per_worker == tasks_per_worker
                && c.cell.sigma_resp == sigma_resp
                && c.cell.eps_div == eps_div
        })
    }

    /// Mean of the cell mean MAEs over the cells accepted by `keep`.
    pub fn mean_mae_where(&self, keep: impl Fn(&Cell) -> bool) -> Option<f64> {
        let v: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| keep(&c.cell))
            .filter_map(|c| c.mean_mae)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    /// One row per cell.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(create(path)?);
        let wrap = |e: csv::Error| Error::Parse {
            what: path.display().to_string(),
            message: e.to_string(),
        };
        w.write_record([
            "n_workers",
            "tasks_per_worker",
            "sigma_resp",
            "eps_div",
            "mean_mae",
            "std_mae",
            "n_ok",
            "n_failed",
        ])
        .map_err(wrap)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for c in &self.cells {
            let ok = c.reps.iter().filter(|r| r.mae.is_some()).count();
            w.write_record([
                c.cell.n_workers.to_string(),
                c.cell.tasks_per_worker.to_string(),
                c.cell.sigma_resp.to_string(),
                c.cell.eps_div.to_string(),
                opt(c.mean_mae),
                opt(c.std_mae),
                ok.to_string(),
                (c.reps.len() - ok).to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Plot data: `x` is the number of virtual workers, `series` names the
    /// cell, `y` is the mean resolution rate.
    pub fn write_resolution_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_writer(create(path)?);
        let wrap = |e: csv::Error| Error::Parse {
            what: path.display().to_string(),
            message: e.to_string(),
        };
        w.write_record(["x", "series", "y"]).map_err(wrap)?;
        for c in &self.cells {
            let Some(curve) = &c.resolution_curve else {
                continue;
            };
            let series = format!(
                "workers={} tasks={} sigma={} eps={}",
                c.cell.n_workers, c.cell.tasks_per_worker, c.cell.sigma_resp, c.cell.eps_div
            );
            for (k, y) in curve.iter().enumerate() {
                w.write_record([(k + 1).to_string(), series.clone(), y.to_string()])
                    .map_err(wrap)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SimConfig {
        SimConfig {
            n_workers: vec![3],
            tasks_per_worker: vec![4],
            sigma_resp: vec![1.0],
            eps_div: vec![0.0],
            repetitions: 1,
            test_virtual_workers: 4,
            net: NetSizes {
                embed: 4,
                hidden: 4,
                d_delta: 2,
            },
            train: TrainConfig {
                epochs: 3,
                j: 2,
                ..TrainConfig::default()
            },
            ..SimConfig::default()
        }
    }

    #[test]
    fn smallest_sweep_is_reproducible() {
        let a = run_sweep(&tiny()).unwrap();
        assert_eq!(a.cells.len(), 1);
        assert_eq!(a.cells[0].reps.len(), 1);
        assert!(!a.cells[0].failed, "{:?}", a.cells[0].reps[0].error);
        let b = run_sweep(&SimConfig {
            parallelism: 2,
            ..tiny()
        })
        .unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.cells[0].resolution_curve.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn cell_count_is_grid_product() {
        let cfg = SimConfig {
            n_workers: vec![2, 3],
            sigma_resp: vec![0.0, 1.0],
            repetitions: 2,
            ..tiny()
        };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.cells.len(), 4);
        assert!(r.cells.iter().all(|c| c.reps.len() == 2));
    }

    #[test]
    fn divergence_marks_cell_failed() {
        let cfg = SimConfig {
            train: TrainConfig {
                learning_rate: 1e300,
                epochs: 2,
                ..tiny().train
            },
            ..tiny()
        };
        let r = run_sweep(&cfg).unwrap();
        assert!(r.cells[0].failed);
        assert!(r.cells[0].mean_mae.is_none());
        assert!(r.cells[0].reps[0]
            .error
            .as_deref()
            .unwrap()
            .contains("diverge"));
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(run_sweep(&SimConfig {
            eps_div: vec![],
            ..tiny()
        })
        .is_err());
    }
}
