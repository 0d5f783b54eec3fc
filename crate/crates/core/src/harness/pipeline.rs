use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::config::{Config, Method, PopulationSource};
use super::sweep::{run_sweep, SimConfig, SweepResult};
use crate::analysis::{
    estimate_kappa, metrics, pair_twins, pure_llm_risk_for_problem, resolution_rate,
    risk_decomposition, theorem3_interval, theorem5_ci, DigitalOutput, ProblemOutcome,
};
use crate::backend::{generate_references, ResponseCache};
use crate::beliefnet::{
    build_examples, load_checkpoint, save_checkpoint, train, write_loss_trace, BeliefNet, NetDims,
};
use crate::data::io::{create, read_json, read_json_lines, write_json};
use crate::data::{
    load_problems, load_responses, save_report, save_responses, Diagnostics, ProblemDiagnostics,
    ProblemReport, ProblemSet, Response, ResponseFormat, ResponseMatrix, RunReport,
};
use crate::decision::{
    aggregate, dawid_skene, glad, personalized_decision_with, Aggregator, LabelMatrix,
};
use crate::error::{Error, Result};
use crate::population::{empirical_w1, sample_profiles, Profile, ProfileSpec, ProfileValue};
use crate::rng::{derive_seed, rng_from_seed, str_tag};

const REFERENCE_STREAM: u64 = 11;
const INIT_STREAM: u64 = 12;
const TRAIN_STREAM: u64 = 13;
const POPULATION_STREAM: u64 = 14;
const SIMULATE_STREAM: u64 = 15;
const SWEEP_STREAM: u64 = 16;

/// A human participant record on disk; the encoding is recomputed from the profile spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub participant_id: String,
    pub values: IndexMap<String, ProfileValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub n_problems: usize,
    pub n_responses: usize,
    pub n_participants: usize,
    pub n_profiles: usize,
    pub responses_per_problem: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDecision {
    pub participant_id: String,
    pub value: f64,
    /// Mean belief effect per decision coordinate.
    pub effect: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedProblem {
    pub problem_id: String,
    pub y_ref: f64,
    pub decisions: Vec<SimulatedDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub participants: Vec<Profile>,
    pub problems: Vec<SimulatedProblem>,
}

impl Simulation {
    pub fn to_matrix(&self) -> Result<ResponseMatrix> {
        ResponseMatrix::new(
            self.problems
                .iter()
                .flat_map(|p| {
                    p.decisions
                        .iter()
                        .map(|d| Response::new(&d.participant_id, &p.problem_id, d.value))
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmSummary {
    pub iterations: usize,
    pub converged: bool,
    pub traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregated {
    /// Problem id to method name to aggregated decision.
    pub values: BTreeMap<String, BTreeMap<String, f64>>,
    pub em: BTreeMap<String, EmSummary>,
}

/// Aggregate every problem of `matrix` with each method. Label models run on
/// the whole matrix at once.
pub fn aggregate_matrix(
    matrix: &ResponseMatrix,
    problems: &ProblemSet,
    methods: &[Method],
    em: &crate::decision::EmConfig,
) -> Result<Aggregated> {
    let mut values: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut summaries = BTreeMap::new();
    for &m in methods {
        let simple = match m {
            Method::Mean => Some(Aggregator::Mean),
            Method::Median => Some(Aggregator::Median),
            Method::Majority => Some(Aggregator::Majority),
            Method::DawidSkene | Method::Glad => None,
        };
        if let Some(a) = simple {
            for pid in matrix.problems() {
                let v = aggregate(&matrix.values_for_problem(pid), a)?;
                values
                    .entry(pid.clone())
                    .or_default()
                    .insert(m.name().into(), v);
            }
            continue;
        }
        let labels = LabelMatrix::from_responses(matrix, problems)?;
        let result = if m == Method::DawidSkene {
            dawid_skene(&labels, em)?
        } else {
            glad(&labels, em)?
        };
        for (pid, v) in labels.items.iter().zip(&result.values) {
            values
                .entry(pid.clone())
                .or_default()
                .insert(m.name().into(), *v);
        }
        summaries.insert(
            m.name().to_string(),
            EmSummary {
                iterations: result.iterations,
                converged: result.converged,
                traces: result.traces,
            },
        );
    }
    Ok(Aggregated {
        values,
        em: summaries,
    })
}

/// File-based pipeline rooted at an output directory with `reports/`,
/// `cache/` and `sweeps/` subdirectories. Every random stream derives from
/// `seed`, so reruns with the same inputs write identical files.
pub struct Pipeline {
    pub config: Config,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Pipeline {
    pub fn new(config: Config, seed: Option<u64>, out_dir: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let seed = seed.unwrap_or(config.seed);
        Ok(Pipeline {
            config: Config { seed, ..config },
            seed,
            out_dir: out_dir.into(),
        })
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.out_dir.join("reports")
    }

    pub fn report_path(&self, name: &str) -> PathBuf {
        self.reports_dir().join(name)
    }

    fn require<'a>(&self, p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        p.as_deref().ok_or_else(|| {
            Error::InvalidArgument(format!("config key data.{key} is required for this step"))
        })
    }

    pub fn problems(&self) -> Result<ProblemSet> {
        load_problems(
            self.require(&self.config.data.problems, "problems")?,
            self.config.data.feature_dim,
        )
    }

    pub fn human_responses(&self, problems: &ProblemSet) -> Result<ResponseMatrix> {
        let path = self.require(&self.config.data.responses, "responses")?;
        load_responses(path, ResponseFormat::from_path(path), Some(problems))
    }

    pub fn profile_spec(&self) -> Result<ProfileSpec> {
        read_json(self.require(&self.config.data.profile_spec, "profile_spec")?)
    }

    pub fn human_profiles(&self, spec: &ProfileSpec) -> Result<Vec<Profile>> {
        let records: Vec<ProfileRecord> =
            read_json_lines(self.require(&self.config.data.profiles, "profiles")?)?;
        records
            .into_iter()
            .map(|r| spec.make_profile(r.participant_id, r.values))
            .collect()
    }

    fn is_test(&self, id: &str) -> bool {
        self.config
            .data
            .test_problems
            .as_ref()
            .is_none_or(|t| t.iter().any(|x| x == id))
    }

    fn is_train(&self, id: &str) -> bool {
        self.config
            .data
            .test_problems
            .as_ref()
            .is_none_or(|t| t.iter().all(|x| x != id))
    }

    fn check_split(&self, problems: &ProblemSet) -> Result<()> {
        if let Some(t) = &self.config.data.test_problems {
            if let Some(bad) = t.iter().find(|id| problems.get(id).is_none()) {
                return Err(Error::UnknownProblem(bad.clone()));
            }
        }
        Ok(())
    }

    /// Validate every configured input file and summarize it.
    pub fn ingest(&self) -> Result<IngestSummary> {
        let problems = self.problems()?;
        self.check_split(&problems)?;
        let responses = match &self.config.data.responses {
            Some(_) => Some(self.human_responses(&problems)?),
            None => None,
        };
        let profiles = match (&self.config.data.profile_spec, &self.config.data.profiles) {
            (Some(_), Some(_)) => self.human_profiles(&self.profile_spec()?)?,
            (Some(_), None) => {
                self.profile_spec()?;
                Vec::new()
            }
            (None, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "data.profiles needs data.profile_spec".into(),
                ));
            }
            (None, None) => Vec::new(),
        };
        if let (Some(r), false) = (&responses, profiles.is_empty()) {
            if let Some(missing) = r
                .participants()
                .iter()
                .find(|p| !profiles.iter().any(|q| &q.participant_id == *p))
            {
                return Err(Error::Unpaired(missing.clone()));
            }
        }
        let summary = IngestSummary {
            n_problems: problems.len(),
            n_responses: responses.as_ref().map_or(0, |r| r.len()),
            n_participants: responses.as_ref().map_or(0, |r| r.participants().len()),
            n_profiles: profiles.len(),
            responses_per_problem: problems
                .iter()
                .map(|p| {
                    (
                        p.id.clone(),
                        responses.as_ref().map_or(0, |r| r.count_for_problem(&p.id)),
                    )
                })
                .collect(),
        };
        write_json(&self.report_path("ingest.json"), &summary)?;
        Ok(summary)
    }

    fn cache_path(&self) -> Option<PathBuf> {
        self.config.backend.cache_path.as_ref().map(|p| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                self.out_dir.join("cache").join(p)
            }
        })
    }

    /// Reference decision for every problem, through the response cache.
    pub fn reference(&self) -> Result<BTreeMap<String, f64>> {
        let problems = self.problems()?;
        let backend = self.config.backend.build()?;
        let cache = self.cache_path().map(ResponseCache::open).transpose()?;
        let refs = generate_references(
            &problems,
            backend.as_ref(),
            cache.as_ref(),
            &self.config.reference,
            derive_seed(self.seed, &[REFERENCE_STREAM]),
            self.config.backend.parallelism,
        )?;
        write_json(&self.report_path("references.json"), &refs)?;
        Ok(refs)
    }

    pub fn references(&self) -> Result<BTreeMap<String, f64>> {
        read_json(&self.report_path("references.json"))
    }

    /// Train the belief net on the training problems; writes the checkpoint
    /// and the loss trace.
    pub fn train(&self) -> Result<BeliefNet> {
        let problems = self.problems()?;
        self.check_split(&problems)?;
        let spec = self.profile_spec()?;
        let profiles = self.human_profiles(&spec)?;
        let refs = self.references()?;
        let responses = self
            .human_responses(&problems)?
            .filter_problems(|id| self.is_train(id));
        let first = responses
            .problems()
            .first()
            .and_then(|id| problems.get(id))
            .ok_or(Error::Empty("training responses"))?;
        let decision_dim = first.scale.decision_dim();
        let n = self.config.net;
        let dims = NetDims::new(first.features.len(), spec.encoded_dim(), decision_dim)
            .with_sizes(n.embed, n.hidden, n.d_delta);
        let mut net = BeliefNet::new(dims, derive_seed(self.seed, &[INIT_STREAM]))?;
        let examples = build_examples(&problems, &responses, &profiles, &refs, decision_dim)?;
        let cfg = crate::beliefnet::TrainConfig {
            seed: derive_seed(self.seed, &[TRAIN_STREAM, self.config.train.seed]),
            ..self.config.train.clone()
        };
        let trace = train(&mut net, &examples, &cfg)?;
        save_checkpoint(
            &net,
            Some(self.config.snapshot()),
            self.report_path("model.json"),
        )?;
        write_loss_trace(self.report_path("loss_trace.csv"), &trace)?;
        Ok(net)
    }

    /// Decisions of the digital population on the evaluation problems.
    pub fn simulate(&self) -> Result<Simulation> {
        let problems = self.problems()?;
        self.check_split(&problems)?;
        let spec = self.profile_spec()?;
        let participants = match self.config.population.source {
            PopulationSource::Sample => sample_profiles(
                &spec,
                self.config.population.n_virtual,
                derive_seed(self.seed, &[POPULATION_STREAM]),
            )?,
            PopulationSource::Twins => self.human_profiles(&spec)?,
        };
        let net = load_checkpoint(self.report_path("model.json"))?;
        let refs = self.references()?;
        let stream = derive_seed(self.seed, &[SIMULATE_STREAM]);
        let mut out = Vec::new();
        for problem in problems.iter().filter(|p| self.is_test(&p.id)) {
            let y_ref = *refs
                .get(&problem.id)
                .ok_or_else(|| Error::MissingReference(problem.id.clone()))?;
            let decisions = participants
                .iter()
                .map(|v| {
                    let mut rng = rng_from_seed(derive_seed(
                        stream,
                        &[str_tag(&problem.id), str_tag(&v.participant_id)],
                    ));
                    let d = personalized_decision_with(
                        &net,
                        problem,
                        v,
                        y_ref,
                        &self.config.blender,
                        &mut rng,
                    )?;
                    Ok(SimulatedDecision {
                        participant_id: v.participant_id.clone(),
                        value: d.value,
                        effect: d.effect,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.push(SimulatedProblem {
                problem_id: problem.id.clone(),
                y_ref,
                decisions,
            });
        }
        let sim = Simulation {
            participants,
            problems: out,
        };
        write_json(&self.report_path("simulation.json"), &sim)?;
        save_responses(self.report_path("simulated.csv"), &sim.to_matrix()?)?;
        Ok(sim)
    }

    fn simulation(&self) -> Result<Simulation> {
        read_json(&self.report_path("simulation.json"))
    }

    pub fn aggregate(&self) -> Result<Aggregated> {
        let problems = self.problems()?;
        let matrix = self.simulation()?.to_matrix()?;
        let agg = aggregate_matrix(
            &matrix,
            &problems,
            &self.config.decision.methods,
            &self.config.decision.em(),
        )?;
        write_json(&self.report_path("aggregated.json"), &agg)?;
        Ok(agg)
    }

    /// Metrics and diagnostics of the predicted decisions against the human
    /// responses, recomputed from the raw decisions.
    pub fn evaluate(&self) -> Result<RunReport> {
        let problems = self.problems()?;
        self.check_split(&problems)?;
        let human = self.human_responses(&problems)?;
        let (predicted, sim) = match &self.config.data.predicted {
            Some(path) => (
                load_responses(path, ResponseFormat::from_path(path), Some(&problems))?,
                None,
            ),
            None => {
                let sim = self.simulation()?;
                (sim.to_matrix()?, Some(sim))
            }
        };
        let ref_path = self.report_path("references.json");
        let refs: Option<BTreeMap<String, f64>> = match &sim {
            _ if ref_path.exists() => Some(read_json(&ref_path)?),
            Some(s) => Some(
                s.problems
                    .iter()
                    .map(|p| (p.problem_id.clone(), p.y_ref))
                    .collect(),
            ),
            None => None,
        };
        let eval_ids: Vec<String> = predicted
            .problems()
            .iter()
            .filter(|id| self.is_test(id) && human.count_for_problem(id) > 0)
            .cloned()
            .collect();
        if eval_ids.is_empty() {
            return Err(Error::Empty(
                "problems with both predicted and human decisions",
            ));
        }
        let predicted = predicted.filter_problems(|id| eval_ids.iter().any(|e| e == id));
        let human_eval = human.filter_problems(|id| eval_ids.iter().any(|e| e == id));
        let methods = &self.config.decision.methods;
        let em = self.config.decision.em();
        let pred_agg = aggregate_matrix(&predicted, &problems, methods, &em)?;
        let human_agg = aggregate_matrix(&human_eval, &problems, methods, &em)?;

        let mut metric_map = BTreeMap::new();
        let mut resolution = BTreeMap::new();
        for m in methods {
            let name = m.name();
            let pred: Vec<ProblemOutcome> = eval_ids
                .iter()
                .map(|id| {
                    ProblemOutcome::new(
                        id,
                        pred_agg.values[id][name],
                        predicted.values_for_problem(id),
                    )
                })
                .collect();
            let reference: Vec<ProblemOutcome> = eval_ids
                .iter()
                .map(|id| {
                    ProblemOutcome::new(
                        id,
                        human_agg.values[id][name],
                        human_eval.values_for_problem(id),
                    )
                })
                .collect();
            metric_map.insert(name.to_string(), metrics(&pred, &reference)?);
            let errs: Vec<f64> = pred
                .iter()
                .zip(&reference)
                .map(|(p, r)| (p.value - r.value).abs())
                .collect();
            resolution.insert(
                name.to_string(),
                resolution_rate(&errs, self.config.analysis.resolution_threshold)?,
            );
        }

        let a = &self.config.analysis;
        let kappa = match (a.kappa, &refs) {
            (Some(k), _) => Some(k),
            (None, Some(r)) => {
                let train_ids: Vec<&String> = human
                    .problems()
                    .iter()
                    .filter(|id| self.is_train(id) && r.contains_key(*id))
                    .collect();
                if train_ids.is_empty() {
                    None
                } else {
                    let y: Vec<f64> = train_ids.iter().map(|id| r[*id]).collect();
                    let m: Vec<f64> = train_ids
                        .iter()
                        .map(|id| aggregate(&human.values_for_problem(id), Aggregator::Mean))
                        .collect::<Result<_>>()?;
                    Some(estimate_kappa(&y, &m, a.alpha)?)
                }
            }
            _ => None,
        };

        let twins = self.config.population.source == PopulationSource::Twins;
        let blender = &self.config.blender;
        let mut reports = Vec::new();
        let mut diags = Vec::new();
        for id in &eval_ids {
            let decisions = predicted.values_for_problem(id);
            let human_values = human_eval.values_for_problem(id);
            let y_ref = refs.as_ref().and_then(|r| r.get(id).copied());
            let numeric = !problems.get(id).expect("known problem").scale.is_choice();
            let sim_problem = sim
                .as_ref()
                .and_then(|s| s.problems.iter().find(|p| &p.problem_id == id));
            let effects: Option<Vec<f64>> = sim_problem
                .filter(|_| numeric)
                .map(|p| p.decisions.iter().map(|d| d.effect[0]).collect());
            let human_mean = aggregate(&human_values, Aggregator::Mean)?;
            let pure_llm = y_ref
                .map(|r| pure_llm_risk_for_problem(&human_eval, id, r, a.eta, a.human_noise_var))
                .transpose()?;
            let tolerance = match (kappa, y_ref, &effects) {
                (Some(k), Some(r), Some(e)) if e.len() >= 2 => {
                    let m = e.iter().sum::<f64>() / e.len() as f64;
                    let eps2 = e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / e.len() as f64;
                    Some(theorem3_interval(e.len(), k, eps2, a.eta, human_mean - r)?)
                }
                _ => None,
            };
            let digital: Option<Vec<DigitalOutput>> = sim_problem.map(|p| {
                p.decisions
                    .iter()
                    .map(|d| DigitalOutput {
                        participant_id: d.participant_id.clone(),
                        response: d.value,
                        mean: d.value,
                        noise_var: blender.sigma * blender.sigma / blender.j as f64,
                    })
                    .collect()
            });
            let residuals: Option<Vec<f64>> = match (&digital, y_ref) {
                (Some(d), _) if twins => Some(
                    human_eval
                        .responses_for_problem(id)
                        .iter()
                        .filter_map(|r| {
                            d.iter()
                                .find(|x| x.participant_id == r.participant_id)
                                .map(|x| r.value - x.response)
                        })
                        .collect(),
                ),
                (_, Some(r)) => Some(human_values.iter().map(|y| y - r).collect()),
                _ => None,
            };
            let confidence = match (&effects, &residuals) {
                (Some(e), Some(r)) if e.len() >= 2 && r.len() >= 2 => {
                    Some(theorem5_ci(&decisions, e, r, a.eta, a.alpha, a.eps0)?)
                }
                _ => None,
            };
            let risk = match &digital {
                Some(d) if twins && numeric => Some(risk_decomposition(&pair_twins(
                    &human_eval,
                    id,
                    d,
                    a.human_noise_var,
                )?)?),
                _ => None,
            };
            diags.push(ProblemDiagnostics {
                problem_id: id.clone(),
                pure_llm,
                tolerance,
                confidence,
                risk,
                mean_belief_effect: effects
                    .as_ref()
                    .map(|e| e.iter().sum::<f64>() / e.len() as f64),
            });
            reports.push(ProblemReport {
                problem_id: id.clone(),
                y_ref,
                wasserstein: empirical_w1(&decisions, &human_values)?,
                decisions,
                human_decisions: human_values,
                aggregated: pred_agg.values[id].clone(),
                human_aggregated: human_agg.values[id].clone(),
            });
        }
        let report = RunReport {
            seed: self.seed,
            config: self.config.snapshot(),
            problems: reports,
            metrics: metric_map,
            diagnostics: Diagnostics {
                resolution_rate: resolution,
                kappa,
                problems: diags,
            },
        };
        save_report(&report, self.report_path("report.json"))?;
        Ok(report)
    }

    /// Render the evaluation report as CSV tables and plot data.
    pub fn report(&self) -> Result<Vec<PathBuf>> {
        let report = crate::data::load_report(self.report_path("report.json"))?;
        let mut written = Vec::new();

        let path = self.report_path("metrics.csv");
        let mut rows = vec![vec![
            "method".to_string(),
            "mae".into(),
            "rmse".into(),
            "cosine".into(),
            "avg_wd".into(),
            "resolution_rate".into(),
        ]];
        for (name, m) in &report.metrics {
            rows.push(vec![
                name.clone(),
                m.mae.to_string(),
                m.rmse.to_string(),
                m.cosine.to_string(),
                m.avg_wd.to_string(),
                report
                    .diagnostics
                    .resolution_rate
                    .get(name)
                    .map_or(String::new(), |r| r.to_string()),
            ]);
        }
        write_csv(&path, &rows)?;
        written.push(path);

        let path = self.report_path("problems.csv");
        let methods: Vec<&String> = report.metrics.keys().collect();
        let mut header = vec![
            "problem_id".to_string(),
            "y_ref".into(),
            "n_digital".into(),
            "n_human".into(),
            "wasserstein".into(),
        ];
        for m in &methods {
            header.push(format!("digital_{m}"));
            header.push(format!("human_{m}"));
        }
        let mut rows = vec![header];
        for p in &report.problems {
            let mut row = vec![
                p.problem_id.clone(),
                p.y_ref.map_or(String::new(), |v| v.to_string()),
                p.decisions.len().to_string(),
                p.human_decisions.len().to_string(),
                p.wasserstein.to_string(),
            ];
            for m in &methods {
                row.push(
                    p.aggregated
                        .get(*m)
                        .map_or(String::new(), |v| v.to_string()),
                );
                row.push(
                    p.human_aggregated
                        .get(*m)
                        .map_or(String::new(), |v| v.to_string()),
                );
            }
            rows.push(row);
        }
        write_csv(&path, &rows)?;
        written.push(path);

        let path = self.report_path("distributions.csv");
        let mut rows = vec![vec!["x".to_string(), "series".into(), "y".into()]];
        for p in &report.problems {
            for (who, values) in [("digital", &p.decisions), ("human", &p.human_decisions)] {
                let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
                for v in values {
                    counts.entry(ordered_bits(*v)).or_insert((*v, 0)).1 += 1;
                }
                for (v, c) in counts.values() {
                    rows.push(vec![
                        v.to_string(),
                        format!("{}/{who}", p.problem_id),
                        c.to_string(),
                    ]);
                }
            }
        }
        write_csv(&path, &rows)?;
        written.push(path);

        let sweep_path = self.out_dir.join("sweeps").join("sweep.json");
        if sweep_path.exists() {
            let sweep: SweepResult = read_json(&sweep_path)?;
            let csv = self.out_dir.join("sweeps").join("sweep.csv");
            let res = self.out_dir.join("sweeps").join("resolution.csv");
            sweep.write_csv(&csv)?;
            sweep.write_resolution_csv(&res)?;
            written.push(csv);
            written.push(res);
        }
        Ok(written)
    }

    /// Factorial simulation study; writes JSON and CSV under `sweeps/`.
    pub fn sweep(&self) -> Result<SweepResult> {
        let cfg = SimConfig {
            seed: derive_seed(self.seed, &[SWEEP_STREAM, self.config.sweep.seed]),
            ..self.config.sweep.clone()
        };
        let result = run_sweep(&cfg)?;
        let dir = self.out_dir.join("sweeps");
        result.save_json(dir.join("sweep.json"))?;
        result.write_csv(dir.join("sweep.csv"))?;
        result.write_resolution_csv(dir.join("resolution.csv"))?;
        Ok(result)
    }
}

/// Key that sorts like the float it encodes.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.write_record(r).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
