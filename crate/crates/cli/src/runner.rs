//! Experiment dispatch and artifact writing.
//!
//! Every experiment produces a JSON result file whose header embeds the
//! tool version, a hash of the resolved config and the seed; series data
//! goes to a CSV file (with the same header as comment lines) or inline
//! into the JSON, depending on the configured format. Certification
//! experiments carry a verdict; a failed check makes the run exit
//! nonzero.

use crate::config::*;
use anyhow::{anyhow, bail, Context, Result};
use cml_core::maps::build_perturbation_map;
use cml_core::meanfield::{iterate_atomic, iterate_grid, AtomicMeasure, MeanFieldParams};
use cml_core::measure::{diagonal_mass_bounds, Boundary, GridMeasure};
use cml_core::sim::{desync, ensemble, run, shrink, Arithmetic, RunRecord, SimulationSpec};
use cml_core::space::Space;
use cml_core::ulam::{
    perturbed_convergence_study, ulam, verify_interaction_contraction, verify_lasota_yorke,
    verify_perturbation_bounds,
};
use cml_core::{rat_to_f64, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    fn record(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn finalize(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }
}

pub struct SeriesTable {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Outcome {
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Header {
    tool: &'static str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    config: ExperimentConfig,
}

fn config_hash(config: &ExperimentConfig) -> Result<String> {
    // serde_json maps are ordered, so this serialization is canonical
    let canonical = serde_json::to_string(config)?;
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    Ok(hex::encode(h.finalize()))
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, label: &str) -> Result<Outcome> {
    let (result, verdict, series) = dispatch(config)?;
    // the output location is not part of the experiment definition
    let mut embedded = config.clone();
    embedded.out = None;
    let header = Header {
        tool: "cml",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(&embedded)?,
        seed: config.seed,
        config: embedded,
    };
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut artifacts = Vec::new();

    let mut doc = json!({
        "header": serde_json::to_value(&header)?,
        "result": result,
        "verdict": serde_json::to_value(&verdict)?,
    });
    match config.format {
        OutputFormat::Csv => {
            for table in &series {
                let path = out_dir.join(format!("{label}.{}.csv", table.name));
                write_csv(&path, &header, table)?;
                artifacts.push(path);
            }
        }
        OutputFormat::Json => {
            let mut tables = serde_json::Map::new();
            for table in &series {
                tables.insert(
                    table.name.clone(),
                    json!({
                        "columns": table.columns,
                        "rows": table.rows,
                    }),
                );
            }
            doc.as_object_mut()
                .unwrap()
                .insert("series".into(), Value::Object(tables));
        }
    }
    let json_path = out_dir.join(format!("{label}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    artifacts.push(json_path);

    for check in &verdict.checks {
        let status = if check.passed { "ok" } else { "FAILED" };
        eprintln!("  [{status}] {}: {}", check.name, check.detail);
    }
    Ok(Outcome {
        passed: verdict.passed,
        artifacts,
    })
}

fn write_csv(path: &Path, header: &Header, table: &SeriesTable) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!(
        "# tool={} version={} config_hash={} seed={}\n",
        header.tool, header.version, header.config_hash, header.seed
    ));
    text.push_str(&format!("{}\n", table.columns.join(",")));
    for row in &table.rows {
        text.push_str(&format!("{}\n", row.join(",")));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

type DispatchResult = (Value, Verdict, Vec<SeriesTable>);

fn dispatch(config: &ExperimentConfig) -> Result<DispatchResult> {
    match config.kind.as_str() {
        "simulate" => run_simulate(config),
        "ensemble" => run_ensemble(config),
        "lemma5" => run_lemma5(config),
        "shrink" => run_shrink(config),
        "ulam" => run_ulam(config),
        "ly_check" => run_ly_check(config),
        "perturb_check" => run_perturb_check(config),
        "invariant" => run_invariant(config),
        "convergence_study" => run_convergence(config),
        "meanfield" => run_meanfield(config),
        "diag_bounds" => run_diag_bounds(config),
        "contraction_check" => run_contraction(config),
        other => bail!("unknown experiment kind `{other}`"),
    }
}

fn record_series(record: &RunRecord) -> SeriesTable {
    let mut rows = Vec::with_capacity(record.diameters.len());
    for (t, d) in record.diameters.iter().enumerate() {
        let clusters = record
            .cluster_counts
            .get(t)
            .map(|c| c.to_string())
            .unwrap_or_default();
        rows.push(vec![t.to_string(), format!("{d:e}"), clusters]);
    }
    SeriesTable {
        name: "series".into(),
        columns: vec!["step", "diameter", "cluster_count"],
        rows,
    }
}

fn run_simulate(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: SimulateParams = config.params_as()?;
    let spec = params.build()?;
    let record = run(&spec, config.seed)?;
    let result = json!({
        "sync_time": record.sync_time,
        "hit_time": record.hit_time,
        "steps_recorded": record.diameters.len() - 1,
        "final_diameter": record.diameters.last(),
        "final_config": record.final_config,
    });
    let verdict = Verdict {
        passed: true,
        checks: vec![],
    };
    Ok((result, verdict, vec![record_series(&record)]))
}

fn check_decay(records: &[RunRecord], factor: f64) -> (usize, f64) {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for rec in records {
        let d0 = rec.diameters[0];
        let mut bound = d0;
        for &d in rec.diameters.iter().skip(1) {
            bound *= factor;
            if d > bound * (1.0 + 1e-12) {
                violations += 1;
            }
            if bound > 0.0 {
                worst = worst.max(d / bound);
            }
        }
    }
    (violations, worst)
}

fn run_ensemble(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: EnsembleParams = config.params_as()?;
    let spec: SimulationSpec = params.sim.build()?;
    let (records, summary) = ensemble(&spec, params.trials, config.seed)?;
    let mut verdict = Verdict::default();
    if let Some(factor) = params.verify_decay_factor {
        let (violations, worst) = check_decay(&records, factor);
        verdict.record(
            "geometric_decay",
            violations == 0,
            format!("factor {factor}: {violations} violations, worst ratio {worst:.3}"),
        );
    }
    if let Some(expect) = params.expect_synced_fraction {
        verdict.record(
            "synced_fraction",
            summary.synced_fraction == expect,
            format!("{} (expected {expect})", summary.synced_fraction),
        );
    }
    if let Some((lo, hi)) = params.expect_mean_hit_between {
        let mean = summary.mean_hit_time.unwrap_or(f64::NAN);
        verdict.record(
            "mean_hit_time",
            mean >= lo && mean <= hi,
            format!("{mean:.2} in [{lo}, {hi}]"),
        );
    }
    let rows = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.sync_time.map(|t| t.to_string()).unwrap_or_default(),
                r.hit_time.map(|t| t.to_string()).unwrap_or_default(),
                format!("{:e}", r.diameters.last().unwrap()),
            ]
        })
        .collect();
    let table = SeriesTable {
        name: "trials".into(),
        columns: vec!["trial", "sync_time", "hit_time", "final_diameter"],
        rows,
    };
    Ok((
        json!({ "summary": summary }),
        verdict.finalize(),
        vec![table],
    ))
}

fn run_lemma5(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: Lemma5Params = config.params_as()?;
    let a0 = parse_rat(&params.a0)?;
    let b0 = parse_rat(&params.b0)?;
    let eps = parse_rat(&params.epsilon)?;
    match params.mode {
        Lemma5Mode::Distance => {
            let orbit = desync::distance_orbit(&a0, &b0, &eps, params.steps)?;
            let rows = orbit
                .pairs
                .iter()
                .enumerate()
                .map(|(t, (a, b))| {
                    let in_a = orbit.first_exit.is_none_or(|fe| t < fe);
                    vec![
                        t.to_string(),
                        format!("{a:e}"),
                        format!("{b:e}"),
                        in_a.to_string(),
                    ]
                })
                .collect();
            let table = SeriesTable {
                name: "orbit".into(),
                columns: vec!["step", "a", "b", "in_domain"],
                rows,
            };
            let mut verdict = Verdict::default();
            verdict.record(
                "stays_in_domain",
                orbit.stays_in_domain,
                format!("first exit: {:?}", orbit.first_exit),
            );
            verdict.record("sum_conserved", orbit.sum_conserved, "exact".into());
            let result = json!({
                "stays_in_domain": orbit.stays_in_domain,
                "sum_conserved": orbit.sum_conserved,
                "final_a": orbit.final_pair.0.to_string(),
                "final_b": orbit.final_pair.1.to_string(),
            });
            Ok((result, verdict.finalize(), vec![table]))
        }
        Lemma5Mode::Position => {
            let exact_run = desync::position_run(
                &Rat::new(1.into(), 7.into()),
                &a0,
                &b0,
                &eps,
                params.exact_horizon,
                Arithmetic::Rational,
            )?;
            let arithmetic = params.arithmetic.build();
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
            let mut rows = Vec::new();
            let mut statuses = Vec::new();
            for trial in 0..params.trials {
                let x1 = Rat::new(rng.gen_range(0..1_048_576).into(), 1_048_576.into());
                let r = desync::position_run(&x1, &a0, &b0, &eps, params.steps, arithmetic)?;
                rows.push(vec![
                    trial.to_string(),
                    format!("{:e}", rat_to_f64(&x1)),
                    r.record
                        .sync_time
                        .map(|t| t.to_string())
                        .unwrap_or_default(),
                ]);
                statuses.push(json!({
                    "trial": trial,
                    "sync_time": r.record.sync_time,
                }));
            }
            let mut verdict = Verdict::default();
            verdict.record(
                "exact_never_syncs",
                exact_run.record.sync_time.is_none()
                    && exact_run.all_diameters_exceed_eps == Some(true),
                format!("{} exact steps", params.exact_horizon),
            );
            let synced = statuses
                .iter()
                .filter(|s| !s["sync_time"].is_null())
                .count();
            let result = json!({
                "exact_sync_time": exact_run.record.sync_time,
                "quantized_runs": statuses,
                "quantized_synced": synced,
                "quantized_trials": params.trials,
            });
            let table = SeriesTable {
                name: "runs".into(),
                columns: vec!["trial", "x1", "sync_time"],
                rows,
            };
            Ok((result, verdict.finalize(), vec![table]))
        }
    }
}

fn run_shrink(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: ShrinkParams = config.params_as()?;
    let mut rows = Vec::new();
    let mut verdict = Verdict::default();
    let mut worst: f64 = 0.0;
    for &n in &params.n_values {
        let closed = shrink::shrink_factor_closed(n)?;
        let sim = shrink::shrink_factor_simulated(n)?;
        worst = worst.max((sim - closed).abs());
        rows.push(vec![
            n.to_string(),
            format!("{closed:.15}"),
            format!("{sim:.15}"),
            format!("{:e}", (sim - closed).abs()),
        ]);
        if n == 4 {
            verdict.record(
                "quarter_ring_exact",
                closed == 1.0 / 3.0 && sim == 1.0 / 3.0,
                format!("closed {closed}, simulated {sim}"),
            );
        }
    }
    verdict.record(
        "simulation_matches_closed_form",
        worst <= 1e-12,
        format!("worst |sim - closed| = {worst:e}"),
    );
    let table = SeriesTable {
        name: "factors".into(),
        columns: vec!["n", "closed_form", "simulated", "abs_diff"],
        rows,
    };
    Ok((
        json!({ "worst_difference": worst }),
        verdict.finalize(),
        vec![table],
    ))
}

fn run_ulam(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: UlamParams = config.params_as()?;
    let map = params.map.build()?;
    let op = ulam(&map, params.n_bins)?;
    let mut rows = Vec::new();
    for (i, row) in op.rows().iter().enumerate() {
        for (j, p) in row {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                p.to_string(),
                format!("{:e}", rat_to_f64(p)),
            ]);
        }
    }
    let stochastic = op.is_row_stochastic();
    let mut verdict = Verdict::default();
    verdict.record(
        "row_stochastic",
        stochastic,
        "exact rational row sums".into(),
    );
    let result = json!({
        "n_bins": op.n_bins(),
        "exact": op.is_exact(),
        "nonzero_entries": rows.len(),
    });
    let table = SeriesTable {
        name: "matrix".into(),
        columns: vec!["row", "col", "fraction", "value"],
        rows,
    };
    Ok((result, verdict.finalize(), vec![table]))
}

fn run_ly_check(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: LyCheckParams = config.params_as()?;
    let map = params.map.build()?;
    let report = verify_lasota_yorke(&map, params.n_bins, params.trials, config.seed)?;
    let mut verdict = Verdict::default();
    verdict.record(
        "no_violations",
        report.violations == 0,
        format!(
            "{} violations over {} trials",
            report.violations, report.trials
        ),
    );
    verdict.record(
        "max_ratio_at_most_one",
        report.max_ratio <= 1.0,
        format!("max ratio {:.4}", report.max_ratio),
    );
    Ok((serde_json::to_value(&report)?, verdict.finalize(), vec![]))
}

fn run_perturb_check(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: PerturbCheckParams = config.params_as()?;
    let spec = params.spec()?;
    let report = verify_perturbation_bounds(&spec, params.n_bins, params.trials, config.seed)?;
    let mut verdict = Verdict::default();
    verdict.record(
        "sharpness_exact",
        report.sharpness_exact,
        format!(
            "V(tau* m) = {} = 2 * {}",
            report.pushed_lebesgue_strong, report.strong_factor
        ),
    );
    verdict.record(
        "strong_bound",
        report.strong_violations == 0,
        format!("{} violations", report.strong_violations),
    );
    verdict.record(
        "weak_bound",
        report.weak_violations == 0,
        format!("{} violations", report.weak_violations),
    );
    Ok((serde_json::to_value(&report)?, verdict.finalize(), vec![]))
}

fn run_invariant(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: InvariantParams = config.params_as()?;
    let map = params.map.build()?;
    let base_op = ulam(&map, params.n_bins)?;
    let mut ops = vec![&base_op];
    let tau_op;
    if let Some(p) = &params.perturbation {
        tau_op = ulam(&build_perturbation_map(&p.build()?)?, params.n_bins)?;
        ops.push(&tau_op);
    }
    let inv = cml_core::ulam::invariant_measure(&ops, params.tol, params.max_iters)?;
    let mut pushed = inv.clone();
    for op in &ops {
        pushed = op.push_f64(&pushed)?;
    }
    let residual = pushed.weak_distance(&inv)?;
    let mut verdict = Verdict::default();
    verdict.record(
        "fixed_point_residual",
        residual <= params.tol * 10.0,
        format!("weak residual {residual:e}"),
    );
    let rows = inv
        .densities()
        .iter()
        .enumerate()
        .map(|(i, d)| vec![i.to_string(), format!("{d:.15}")])
        .collect();
    let table = SeriesTable {
        name: "density".into(),
        columns: vec!["bin", "density"],
        rows,
    };
    let result = json!({
        "n_bins": inv.n_bins(),
        "mass": inv.mass(),
        "weak_residual": residual,
        "densities": inv.densities(),
    });
    Ok((result, verdict.finalize(), vec![table]))
}

fn run_convergence(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: ConvergenceParams = config.params_as()?;
    let base = params.base.build()?;
    let a = parse_rat(&params.interval_start)?;
    let slope = parse_rat(&params.slope)?;
    let family: Result<Vec<_>> = params
        .deltas
        .iter()
        .map(|d| {
            let delta = parse_rat(d)?;
            Ok(
                cml_core::maps::PerturbationMapSpec::with_midpoint_intercepts(
                    vec![(a.clone(), &a + delta)],
                    vec![slope.clone()],
                )?,
            )
        })
        .collect();
    let study =
        perturbed_convergence_study(&base, &family?, params.n_bins, params.tol, params.max_iters)?;
    let mut verdict = Verdict::default();
    verdict.record(
        "strictly_decreasing",
        study.strictly_decreasing,
        format!("{} deltas", study.rows.len()),
    );
    let linear = study
        .rows
        .iter()
        .all(|r| r.weak_distance <= study.fitted_c * r.delta + 1e-15);
    verdict.record(
        "linear_bound",
        linear,
        format!("fitted C = {:.4}", study.fitted_c),
    );
    let rows = study
        .rows
        .iter()
        .map(|r| {
            vec![
                format!("{:e}", r.delta),
                format!("{:e}", r.weak_distance),
                format!("{:e}", r.weak_distance / r.delta),
            ]
        })
        .collect();
    let table = SeriesTable {
        name: "distances".into(),
        columns: vec!["delta", "weak_distance", "ratio"],
        rows,
    };
    Ok((
        serde_json::to_value(&study)?,
        verdict.finalize(),
        vec![table],
    ))
}

fn run_meanfield(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: MeanfieldParams = config.params_as()?;
    let mf = MeanFieldParams::new(params.epsilon, params.gamma, params.map.build()?)
        .map_err(|e| anyhow!(e))?;
    match &params.init {
        MeasureInitCfg::Lebesgue | MeasureInitCfg::PerturbedLebesgue { .. } => {
            let mu0 = match &params.init {
                MeasureInitCfg::Lebesgue => {
                    GridMeasure::lebesgue(params.n_bins, Boundary::Periodic)
                }
                MeasureInitCfg::PerturbedLebesgue { amplitude } => {
                    let n = params.n_bins;
                    let d: Vec<f64> = (0..n)
                        .map(|i| {
                            1.0 + amplitude
                                * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()
                        })
                        .collect();
                    GridMeasure::new(d, Boundary::Periodic).map_err(|e| anyhow!(e))?
                }
                _ => unreachable!(),
            };
            let mut verdict = Verdict::default();
            let mut residuals = Vec::new();
            let mut tables = Vec::new();
            for &resolution in &params.resolutions {
                let traj =
                    iterate_grid(&mu0, &mf, params.steps, resolution).map_err(|e| anyhow!(e))?;
                let first_residual = traj.successive_weak_distances[0];
                residuals.push(json!({
                    "resolution": resolution,
                    "first_step_residual": first_residual,
                    "successive_weak_distances": traj.successive_weak_distances,
                }));
                if params.check_lebesgue_residual {
                    verdict.record(
                        &format!("residual_bound_res{resolution}"),
                        first_residual <= 2.0 / resolution as f64,
                        format!("{first_residual:e} <= {}", 2.0 / resolution as f64),
                    );
                }
                let mut rows = Vec::new();
                for (step, m) in traj.measures.iter().enumerate() {
                    for (bin, d) in m.densities().iter().enumerate() {
                        rows.push(vec![step.to_string(), bin.to_string(), format!("{d:.15}")]);
                    }
                }
                tables.push(SeriesTable {
                    name: format!("trajectory_res{resolution}"),
                    columns: vec!["step", "bin", "density"],
                    rows,
                });
            }
            if params.check_lebesgue_residual && params.resolutions.len() >= 2 {
                let first = residuals[0]["first_step_residual"].as_f64().unwrap();
                let last = residuals.last().unwrap()["first_step_residual"]
                    .as_f64()
                    .unwrap();
                verdict.record(
                    "residual_decays",
                    first >= 3.0 * last,
                    format!("{first:e} >= 3 * {last:e}"),
                );
            }
            Ok((
                json!({ "resolutions": residuals }),
                verdict.finalize(),
                tables,
            ))
        }
        MeasureInitCfg::Orbit { x0, period } => {
            let mu0 = AtomicMeasure::periodic_orbit(&parse_rat(x0)?, &mf.map, *period)
                .map_err(|e| anyhow!(e))?;
            run_meanfield_atomic(&params, &mf, mu0)
        }
        MeasureInitCfg::Atoms { atoms } => {
            let parsed: Result<Vec<(Rat, Rat)>> = atoms
                .iter()
                .map(|(p, m)| Ok((parse_rat(p)?, parse_rat(m)?)))
                .collect();
            let mu0 = AtomicMeasure::new(parsed?).map_err(|e| anyhow!(e))?;
            run_meanfield_atomic(&params, &mf, mu0)
        }
    }
}

fn run_meanfield_atomic(
    params: &MeanfieldParams,
    mf: &MeanFieldParams,
    mu0: AtomicMeasure,
) -> Result<DispatchResult> {
    let traj = iterate_atomic(&mu0, mf, params.steps).map_err(|e| anyhow!(e))?;
    let mut verdict = Verdict::default();
    if params.expect_invariant {
        let invariant = traj.measures.iter().all(|m| *m == mu0);
        verdict.record(
            "exactly_invariant",
            invariant,
            format!("{} steps, exact atom comparison", params.steps),
        );
    }
    let mut rows = Vec::new();
    for (step, m) in traj.measures.iter().enumerate() {
        for (i, (p, mass)) in m.atoms().iter().enumerate() {
            rows.push(vec![
                step.to_string(),
                i.to_string(),
                format!("{:e}", rat_to_f64(p)),
                format!("{:e}", rat_to_f64(mass)),
            ]);
        }
    }
    let table = SeriesTable {
        name: "atoms".into(),
        columns: vec!["step", "atom", "position", "mass"],
        rows,
    };
    let result = json!({
        "steps": params.steps,
        "successive_tv_distances":
            traj.successive_tv_distances.iter().map(rat_to_f64).collect::<Vec<f64>>(),
    });
    Ok((result, verdict.finalize(), vec![table]))
}

fn run_diag_bounds(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: DiagBoundsParams = config.params_as()?;
    let mu: GridMeasure = GridMeasure::lebesgue(params.n_bins, Boundary::ZeroExtension);
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let report = diagonal_mass_bounds(
        &mu,
        &Space::interval(),
        params.n_particles,
        params.epsilon,
        params.samples,
        &mut rng,
    )?;
    let mut verdict = Verdict::default();
    verdict.record(
        "mc_consistent_with_lower_bound",
        report.consistent,
        format!(
            "mc {:.5} >= {:.5} - 3 sigma",
            report.mc_estimate, report.lower_sum
        ),
    );
    verdict.record(
        "partition_floor",
        report.floor_respected,
        format!("{:.5} >= {:.5}", report.lower_sum, report.uniform_floor),
    );
    if let Some(expect) = params.expect_lower_sum {
        verdict.record(
            "lower_sum_exact",
            report.lower_sum == expect,
            format!("{} (expected {expect})", report.lower_sum),
        );
    }
    if let Some((target, tol)) = params.expect_mc {
        verdict.record(
            "mc_estimate_near_target",
            (report.mc_estimate - target).abs() <= tol,
            format!("{:.5} within {tol} of {target}", report.mc_estimate),
        );
    }
    Ok((serde_json::to_value(&report)?, verdict.finalize(), vec![]))
}

fn run_contraction(config: &ExperimentConfig) -> Result<DispatchResult> {
    let params: ContractionCheckParams = config.params_as()?;
    let mut rows = Vec::new();
    let mut worst_gain: f64 = 0.0;
    let mut worst_eigen: f64 = 0.0;
    let mut affine_violations = 0;
    for &n in &params.n_values {
        for &gamma in &params.gammas {
            let rep = verify_interaction_contraction(n, gamma, params.samples, config.seed)?;
            worst_gain = worst_gain.max((rep.euclid_min_gain - gamma).abs());
            worst_eigen = worst_eigen.max(rep.eigen_error);
            affine_violations += rep.affine_violations;
            rows.push(vec![
                n.to_string(),
                format!("{gamma}"),
                format!("{:e}", rep.euclid_min_gain),
                format!("{:e}", rep.eigen_error),
                format!("{:e}", rep.sampled_min_max_norm),
                format!("{:e}", rep.sampled_min_sum_norm),
                format!("{:e}", rep.meanzero_min_max_norm),
            ]);
        }
    }
    let mut verdict = Verdict::default();
    verdict.record(
        "euclid_min_gain_equals_gamma",
        worst_gain <= 1e-10,
        format!("worst |gain - gamma| = {worst_gain:e}"),
    );
    verdict.record(
        "eigenvalues_match",
        worst_eigen <= 1e-10,
        format!("worst eigenvalue error = {worst_eigen:e}"),
    );
    verdict.record(
        "affine_route",
        affine_violations == 0,
        format!("{affine_violations} exact violations"),
    );
    let table = SeriesTable {
        name: "gains".into(),
        columns: vec![
            "n",
            "gamma",
            "euclid_min_gain",
            "eigen_error",
            "min_max_norm",
            "min_sum_norm",
            "meanzero_min_max_norm",
        ],
        rows,
    };
    let result = json!({
        "worst_gain_error": worst_gain,
        "worst_eigen_error": worst_eigen,
    });
    Ok((result, verdict.finalize(), vec![table]))
}
