//! `intervene`: experiment runner for power control games under intervention.
//!
//! Every subcommand reads a scenario file, writes one CSV with a documented
//! header into `--out`, and drops a `manifest.json` recording the inputs,
//! seed, versions and tolerances, so each row can be reproduced by calling the
//! library directly. Exit codes: 0 success, 2 validation error, 3 infeasible.

use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use intervene_core::adjust::{
    convergence_time_bound, fixed_rd_sequence, geometric_sequence, min_geometric_length,
    mrd_sequence, relative_distance, rules_for_sequence, run_adjustment, sequence_budgets,
    Schedule, TargetSequence,
};
use intervene_core::design::{
    design_aggregate, design_fast_converge, design_strong_sustain, design_sustain,
    fast_budget_bound, simulated_strong_sustain_budget, strong_budget_upper_bound, sustain_budget,
    DesignReport,
};
use intervene_core::estimate::run_estimation;
use intervene_core::scenario::{load_scenario, ScenarioFile};
use intervene_core::welfare::{solve_target, welfare, WelfareKind};
use intervene_core::{enumerate_equilibria, Error as CoreError, NetworkParams, PowerProfile, Rule};

#[derive(Parser)]
#[command(
    name = "intervene",
    version,
    about = "Power control games under intervention"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for the CSV and the run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Seed recorded in the manifest; overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep user 2's transmitter distance and compare welfare with and
    /// without intervention.
    SweepWelfare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        from: f64,
        #[arg(long, default_value_t = 1.5)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// Grid points per axis for the target solver.
        #[arg(long, default_value_t = 61)]
        grid: usize,
        #[arg(long, default_value_t = 2)]
        refine: usize,
    },
    /// Minimum-budget surfaces over a grid of two-user targets: sustainment
    /// floor, simulated strong-sustainment minimum, and the two closed-form
    /// bounds.
    BudgetContour {
        #[command(flatten)]
        common: Common,
        /// Targets per axis (each target lands on the enumeration grid).
        #[arg(long, default_value_t = 20)]
        targets: usize,
        /// Enumeration grid points per axis.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
    },
    /// Convergence steps and budget requirement of the fixed-distance and
    /// geometric target sequences across relative distances.
    RdTradeoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        min_delta: f64,
        #[arg(long, default_value_t = 0.9)]
        max_delta: f64,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Convergence steps of the maximal-distance and geometric sequences
    /// across intervention budgets, next to the theoretical bound.
    BudgetTime {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 3.0)]
        max_factor: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps1: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps2: f64,
    },
    /// Design an intervention rule for a target profile.
    Design {
        #[command(flatten)]
        common: Common,
        /// Comma-separated target powers; defaults to the scenario's target.
        #[arg(long)]
        target: Option<String>,
        /// sustain | strong | fast | aggregate
        #[arg(long, default_value = "sustain")]
        mode: String,
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
    },
    /// Run the adjustment dynamic and record the trajectory.
    Adjust {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<String>,
        /// none | sustain | fast | rd:<delta> | mrd[:<budget>]
        #[arg(long, default_value = "fast")]
        schedule: String,
        /// Comma-separated initial profile; defaults to full power.
        #[arg(long)]
        initial: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
    },
    /// Run the blind estimation protocol and report recovered parameters.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Comma-separated temporary target; defaults to half the max powers.
        #[arg(long)]
        temp_target: Option<String>,
    },
    /// Enumerate grid equilibria under a designed rule (or none).
    Equilibria {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: Option<String>,
        /// none | sustain | strong | fast | aggregate | extreme
        #[arg(long, default_value = "none")]
        mode: String,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        margin: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Infeasible(_) => 3,
                CoreError::Protocol(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepWelfare {
            common,
            from,
            to,
            points,
            grid,
            refine,
        } => sweep_welfare(&common, from, to, points, grid, refine),
        Command::BudgetContour {
            common,
            targets,
            grid,
            margin,
        } => budget_contour(&common, targets, grid, margin),
        Command::RdTradeoff {
            common,
            min_delta,
            max_delta,
            points,
        } => rd_tradeoff(&common, min_delta, max_delta, points),
        Command::BudgetTime {
            common,
            points,
            max_factor,
            eps1,
            eps2,
        } => budget_time(&common, points, max_factor, eps1, eps2),
        Command::Design {
            common,
            target,
            mode,
            margin,
        } => design(&common, target, &mode, margin),
        Command::Adjust {
            common,
            target,
            schedule,
            initial,
            max_steps,
            margin,
        } => adjust(&common, target, &schedule, initial, max_steps, margin),
        Command::Estimate {
            common,
            eps,
            temp_target,
        } => estimate(&common, eps, temp_target),
        Command::Equilibria {
            common,
            target,
            mode,
            grid,
            tol,
            margin,
        } => equilibria(&common, target, &mode, grid, tol, margin),
    }
}

struct Run {
    scenario: ScenarioFile,
    scenario_path: PathBuf,
    out: PathBuf,
    seed: u64,
}

fn open_run(common: &Common) -> Result<Run> {
    let scenario = load_scenario(&common.scenario)?;
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("cannot create {}", common.out.display()))?;
    let seed = common.seed.or(scenario.seed).unwrap_or(0);
    Ok(Run {
        scenario,
        scenario_path: common.scenario.clone(),
        out: common.out.clone(),
        seed,
    })
}

impl Run {
    fn params(&self) -> Result<NetworkParams> {
        Ok(self.scenario.params()?)
    }

    fn write_manifest(
        &self,
        subcommand: &str,
        params: serde_json::Value,
        outputs: &[&str],
    ) -> Result<()> {
        let manifest = json!({
            "tool": "intervene",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "scenario_path": self.scenario_path.display().to_string(),
            "scenario": serde_json::to_value(&self.scenario)?,
            "seed": self.seed,
            "params": params,
            "outputs": outputs,
        });
        let path = self.out.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }

    fn csv(&self, name: &str) -> Result<csv::Writer<std::fs::File>> {
        let path = self.out.join(name);
        csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))
    }
}

fn parse_profile(text: &str, n: usize, what: &str) -> Result<PowerProfile> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("bad {what} entry {s:?}: {e}"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n {
        return Err(anyhow!(CoreError::DimensionMismatch {
            expected: n,
            got: values.len()
        }));
    }
    Ok(PowerProfile::new(values))
}

fn target_from(run: &Run, flag: Option<String>, params: &NetworkParams) -> Result<PowerProfile> {
    match flag {
        Some(text) => parse_profile(&text, params.n_users(), "target"),
        None => run.scenario.target().ok_or_else(|| {
            anyhow!(CoreError::Scenario(
                "no --target given and the scenario declares none".into()
            ))
        }),
    }
}

fn design_by_mode(
    params: &NetworkParams,
    target: &PowerProfile,
    mode: &str,
    margin: f64,
) -> Result<DesignReport> {
    Ok(match mode {
        "sustain" => design_sustain(params, target, margin)?,
        "strong" => design_strong_sustain(params, target, margin, None)?,
        "fast" => design_fast_converge(params, target, margin)?,
        "aggregate" => design_aggregate(params, target, margin)?,
        other => {
            return Err(anyhow!(CoreError::Scenario(format!(
                "unknown design mode {other:?}"
            ))))
        }
    })
}

/// Moves user 2's transmitter along the ray from its receiver through its
/// original transmitter position, to distance `d`.
fn with_interferer_distance(scenario: &ScenarioFile, d: f64) -> Result<ScenarioFile> {
    let mut out = scenario.clone();
    let geo = out.geometry.as_mut().ok_or_else(|| {
        anyhow!(CoreError::Scenario(
            "welfare sweep needs a geometry scenario".into()
        ))
    })?;
    if geo.users.len() < 2 {
        return Err(anyhow!(CoreError::Scenario(
            "welfare sweep needs at least two users".into()
        )));
    }
    let u = &mut geo.users[1];
    let dx = u.tx[0] - u.rx[0];
    let dy = u.tx[1] - u.rx[1];
    let norm = (dx * dx + dy * dy).sqrt();
    if norm <= 0.0 {
        return Err(anyhow!(CoreError::Scenario(
            "user 2 transmitter sits on its receiver".into()
        )));
    }
    u.tx = [u.rx[0] + d * dx / norm, u.rx[1] + d * dy / norm];
    Ok(out)
}

fn sweep_welfare(
    common: &Common,
    from: f64,
    to: f64,
    points: usize,
    grid: usize,
    refine: usize,
) -> Result<()> {
    let run = open_run(common)?;
    if points < 2 || to <= from {
        return Err(anyhow!(CoreError::Scenario(
            "need points >= 2 and to > from".into()
        )));
    }
    let distances: Vec<f64> = (0..points)
        .map(|k| from + (to - from) * k as f64 / (points - 1) as f64)
        .collect();
    let rows: Vec<Result<[f64; 7]>> = distances
        .par_iter()
        .map(|&d| {
            let params = with_interferer_distance(&run.scenario, d)?.params()?;
            let full = params.full_power();
            let mut row = [d, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            for (k, kind) in [WelfareKind::SumRate, WelfareKind::MaxMin]
                .into_iter()
                .enumerate()
            {
                let ne = welfare(&params, &full, kind)?;
                let best = solve_target(&params, kind, grid, refine)?;
                let opt = welfare(&params, &best, kind)?;
                row[1 + 3 * k] = ne;
                row[2 + 3 * k] = opt;
                row[3 + 3 * k] = opt / ne;
            }
            Ok(row)
        })
        .collect();
    let mut writer = run.csv("welfare_sweep.csv")?;
    writer.write_record([
        "d22",
        "sum_rate_ne",
        "sum_rate_opt",
        "sum_rate_ratio",
        "max_min_ne",
        "max_min_opt",
        "max_min_ratio",
    ])?;
    for row in rows {
        let row = row?;
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    run.write_manifest(
        "sweep-welfare",
        json!({"from": from, "to": to, "points": points, "grid": grid, "refine": refine,
               "objectives": ["sum_rate", "max_min"], "log_base": "e"}),
        &["welfare_sweep.csv"],
    )?;
    println!("wrote {} rows to welfare_sweep.csv", points);
    Ok(())
}

fn budget_contour(common: &Common, targets: usize, grid: usize, margin: f64) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    if params.n_users() != 2 {
        return Err(anyhow!(CoreError::Scenario(
            "budget-contour uses a two-user scenario (grid enumeration oracle)".into()
        )));
    }
    if (grid - 1) % targets != 0 {
        return Err(anyhow!(CoreError::Scenario(format!(
            "targets ({targets}) must divide grid-1 ({}) so targets land on the grid",
            grid - 1
        ))));
    }
    let cells: Vec<(usize, usize)> = (1..=targets)
        .flat_map(|a| (1..=targets).map(move |b| (a, b)))
        .collect();
    let rows: Vec<Result<Vec<String>>> = cells
        .par_iter()
        .map(|&(a, b)| {
            let target = PowerProfile::new(vec![
                params.max_power(0) * a as f64 / targets as f64,
                params.max_power(1) * b as f64 / targets as f64,
            ]);
            let floor = sustain_budget(&params, &target)?;
            let strong = strong_budget_upper_bound(&params, &target)?;
            let simulated = simulated_strong_sustain_budget(&params, &target, grid, 1e-9, margin)?;
            let (fast, feasible) = match fast_budget_bound(&params, &target) {
                Ok(v) => (v.to_string(), "1"),
                Err(_) => (String::new(), "0"),
            };
            Ok(vec![
                target[0].to_string(),
                target[1].to_string(),
                floor.to_string(),
                simulated.to_string(),
                strong.to_string(),
                fast,
                feasible.to_string(),
            ])
        })
        .collect();
    let mut writer = run.csv("budget_contour.csv")?;
    writer.write_record([
        "target_1",
        "target_2",
        "sustain_budget",
        "simulated_strong_budget",
        "strong_upper_bound",
        "fast_bound",
        "fast_feasible",
    ])?;
    for row in rows {
        writer.write_record(row?)?;
    }
    writer.flush()?;
    run.write_manifest(
        "budget-contour",
        json!({"targets": targets, "grid": grid, "margin": margin, "nash_tol": 1e-9}),
        &["budget_contour.csv"],
    )?;
    println!("wrote {} rows to budget_contour.csv", targets * targets);
    Ok(())
}

fn sequence_summary(params: &NetworkParams, seq: &TargetSequence) -> Result<(usize, f64)> {
    let budgets = if seq.step_budgets.is_empty() {
        sequence_budgets(params, seq)?
    } else {
        seq.step_budgets.clone()
    };
    Ok((seq.len(), budgets.iter().cloned().fold(0.0, f64::max)))
}

fn rd_tradeoff(common: &Common, min_delta: f64, max_delta: f64, points: usize) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let target = target_from(&run, None, &params)?;
    let mut writer = run.csv("rd_tradeoff.csv")?;
    writer.write_record([
        "delta",
        "rd_steps",
        "rd_budget",
        "geometric_steps",
        "geometric_budget",
    ])?;
    for k in 0..points {
        let delta = min_delta + (max_delta - min_delta) * k as f64 / (points - 1).max(1) as f64;
        let seq = fixed_rd_sequence(&params, &target, delta)?;
        let (rd_steps, rd_budget) = sequence_summary(&params, &seq)?;
        // Shortest geometric sequence whose per-step distance stays below the
        // same delta.
        let mut geo = None;
        for t in 2..500 {
            let candidate = geometric_sequence(&target, params.max_powers(), t)?;
            let worst = candidate
                .targets
                .windows(2)
                .map(|w| relative_distance(&w[0], &w[1]).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            if worst <= delta {
                geo = Some(candidate);
                break;
            }
        }
        let (geo_steps, geo_budget) = match geo {
            Some(seq) => sequence_summary(&params, &seq)?,
            None => (0, f64::INFINITY),
        };
        writer.write_record([
            delta.to_string(),
            rd_steps.to_string(),
            rd_budget.to_string(),
            geo_steps.to_string(),
            geo_budget.to_string(),
        ])?;
    }
    writer.flush()?;
    run.write_manifest(
        "rd-tradeoff",
        json!({"min_delta": min_delta, "max_delta": max_delta, "points": points}),
        &["rd_tradeoff.csv"],
    )?;
    println!("wrote {points} rows to rd_tradeoff.csv");
    Ok(())
}

fn budget_time(
    common: &Common,
    points: usize,
    max_factor: f64,
    eps1: f64,
    eps2: f64,
) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let target = target_from(&run, None, &params)?;
    let full = params.full_power();
    let require: f64 = (0..params.n_users())
        .map(|i| {
            (params.max_power(i) - target[i]) / target[i]
                * (params.interference(&full, i) / params.device_tx_gain(i))
        })
        .fold(0.0, f64::max);
    let mut writer = run.csv("budget_time.csv")?;
    writer.write_record([
        "budget",
        "mrd_steps",
        "mrd_measured_steps",
        "geometric_steps",
        "time_bound",
    ])?;
    for k in 0..points {
        let budget = require * (1.02 + (max_factor - 1.02) * k as f64 / (points - 1).max(1) as f64);
        let seq = mrd_sequence(&params, &target, budget, eps1, eps2)?;
        let capped = params.with_capability(budget)?;
        let stages = rules_for_sequence(&capped, &seq, 1e-6)?;
        let traj = run_adjustment(&capped, &Schedule::Staged(stages), &full, seq.len() + 10)?;
        let measured = traj
            .steps_to_converge
            .map(|s| s.to_string())
            .unwrap_or_else(|| "".into());
        let geo = min_geometric_length(&params, &target, budget, eps1, eps2, 500)
            .map(|t| t.to_string())
            .unwrap_or_default();
        let bound = convergence_time_bound(&params, &target, budget)
            .map(|t| t.to_string())
            .unwrap_or_default();
        writer.write_record([
            budget.to_string(),
            seq.len().to_string(),
            measured,
            geo,
            bound,
        ])?;
    }
    writer.flush()?;
    run.write_manifest(
        "budget-time",
        json!({"points": points, "max_factor": max_factor, "eps1": eps1, "eps2": eps2,
               "sequencing_requirement": require}),
        &["budget_time.csv"],
    )?;
    println!("wrote {points} rows to budget_time.csv");
    Ok(())
}

fn design(common: &Common, target: Option<String>, mode: &str, margin: f64) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let target = target_from(&run, target, &params)?;
    let report = design_by_mode(&params, &target, mode, margin)?;
    let mut writer = run.csv("design.csv")?;
    writer.write_record(["user", "target", "min_rate", "designed_rate"])?;
    for i in 0..params.n_users() {
        let designed = match &report.rule {
            Rule::Individual(r) => r.rates[i],
            Rule::Aggregate(r) => r.rate,
            _ => unreachable!("designers produce first-order rules"),
        };
        writer.write_record([
            i.to_string(),
            target[i].to_string(),
            report.min_rates[i].to_string(),
            designed.to_string(),
        ])?;
    }
    writer.flush()?;
    run.write_manifest(
        "design",
        json!({"mode": mode, "margin": margin, "target": target.to_vec(),
               "min_budget": report.min_budget, "capability": params.capability(),
               "active_users": report.active_users}),
        &["design.csv"],
    )?;
    println!(
        "{mode} design: min budget {}, capability {}",
        report.min_budget,
        params.capability()
    );
    Ok(())
}

fn adjust(
    common: &Common,
    target: Option<String>,
    schedule: &str,
    initial: Option<String>,
    max_steps: usize,
    margin: f64,
) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let n = params.n_users();
    let initial = match initial {
        Some(text) => parse_profile(&text, n, "initial")?,
        None => params.full_power(),
    };
    let schedule_obj = if schedule == "none" {
        Schedule::NoIntervention
    } else {
        let target = target_from(&run, target, &params)?;
        if let Some(delta) = schedule.strip_prefix("rd:") {
            let delta: f64 = delta.parse().map_err(|e| anyhow!("bad delta: {e}"))?;
            let seq = fixed_rd_sequence(&params, &target, delta)?;
            Schedule::Staged(rules_for_sequence(&params, &seq, margin)?)
        } else if schedule == "mrd" || schedule.starts_with("mrd:") {
            let budget = match schedule.strip_prefix("mrd:") {
                Some(b) => b.parse().map_err(|e| anyhow!("bad budget: {e}"))?,
                None => params.capability(),
            };
            let seq = mrd_sequence(&params, &target, budget, 1e-3, 1e-3)?;
            Schedule::Staged(rules_for_sequence(&params, &seq, margin)?)
        } else {
            let report = match schedule {
                "sustain" => design_sustain(&params, &target, margin)?,
                "fast" => design_fast_converge(&params, &target, margin)?,
                other => {
                    return Err(anyhow!(CoreError::Scenario(format!(
                        "unknown schedule {other:?} (none | sustain | fast | rd:<delta> | mrd[:<budget>])"
                    ))))
                }
            };
            match report.rule {
                Rule::Individual(rule) => Schedule::Fixed(rule),
                _ => unreachable!("fixed schedules are individual-power rules"),
            }
        }
    };
    let traj = run_adjustment(&params, &schedule_obj, &initial, max_steps)?;
    let mut writer = run.csv("trajectory.csv")?;
    let mut header = vec!["step".to_string()];
    header.extend((0..n).map(|i| format!("target_{i}")));
    header.extend((0..n).map(|i| format!("power_{i}")));
    header.push("intervention_power".into());
    writer.write_record(&header)?;
    for (t, step) in traj.steps.iter().enumerate() {
        let mut row = vec![(t + 1).to_string()];
        row.extend(step.target.as_slice().iter().map(|v| v.to_string()));
        row.extend(step.profile.as_slice().iter().map(|v| v.to_string()));
        row.push(step.intervention_power.to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    run.write_manifest(
        "adjust",
        json!({"schedule": schedule, "margin": margin, "max_steps": max_steps,
               "initial": initial.to_vec(), "converged": traj.converged,
               "steps_to_converge": traj.steps_to_converge}),
        &["trajectory.csv"],
    )?;
    match traj.steps_to_converge {
        Some(t) => println!("converged in {t} steps"),
        None => println!("did not converge within {max_steps} steps"),
    }
    Ok(())
}

fn estimate(common: &Common, eps: f64, temp_target: Option<String>) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let n = params.n_users();
    let temp = match temp_target {
        Some(text) => parse_profile(&text, n, "temp-target")?,
        None => PowerProfile::new((0..n).map(|i| 0.5 * params.max_power(i)).collect()),
    };
    let (rounds, report) = run_estimation(&params, &temp, eps)?;
    let mut writer = run.csv("estimation.csv")?;
    writer.write_record(["quantity", "i", "j", "recovered", "truth"])?;
    for i in 0..n {
        writer.write_record([
            "max_power".into(),
            i.to_string(),
            String::new(),
            report.max_powers[i].to_string(),
            params.max_power(i).to_string(),
        ])?;
        writer.write_record([
            "normalized_noise".into(),
            i.to_string(),
            String::new(),
            report.normalized_noise[i].to_string(),
            (params.noise(i) / params.device_tx_gain(i)).to_string(),
        ])?;
        for j in 0..n {
            if i != j {
                writer.write_record([
                    "normalized_cross_gain".into(),
                    i.to_string(),
                    j.to_string(),
                    report.normalized_cross_gains[i][j].to_string(),
                    (params.cross_gain(i, j) / params.device_tx_gain(i)).to_string(),
                ])?;
            }
        }
    }
    let locs = params.locations().expect("estimation ran");
    for l in 0..report.device_gains.len() {
        for i in 0..n {
            writer.write_record([
                "device_gain".into(),
                l.to_string(),
                i.to_string(),
                report.device_gains[l][i].to_string(),
                locs.gains[l][i].to_string(),
            ])?;
        }
    }
    writer.flush()?;
    let broadcasts: Vec<usize> = rounds.iter().map(|r| r.broadcast_count).collect();
    run.write_manifest(
        "estimate",
        json!({"eps": eps, "temp_target": temp.to_vec(),
               "total_broadcasts": report.total_broadcasts,
               "per_round_broadcasts": broadcasts,
               "overhead_model": "2 N^2 log2(1/eps)"}),
        &["estimation.csv"],
    )?;
    println!(
        "estimation finished: {} broadcasts (model {:.0})",
        report.total_broadcasts,
        2.0 * (n as f64).powi(2) * (1.0 / eps).log2()
    );
    Ok(())
}

fn equilibria(
    common: &Common,
    target: Option<String>,
    mode: &str,
    grid: usize,
    tol: f64,
    margin: f64,
) -> Result<()> {
    let run = open_run(common)?;
    let params = run.params()?;
    let rule = match mode {
        "none" => None,
        "extreme" => {
            let target = target_from(&run, target, &params)?;
            let (rule, _) = intervene_core::design::extreme_rule(&params, &target)?;
            Some(Rule::Extreme(rule))
        }
        _ => {
            let target = target_from(&run, target, &params)?;
            Some(design_by_mode(&params, &target, mode, margin)?.rule)
        }
    };
    let eq = enumerate_equilibria(&params, rule.as_ref(), grid, tol)?;
    let reps = eq.representatives();
    let mut writer = run.csv("equilibria.csv")?;
    let mut header = vec!["cluster".to_string(), "cluster_size".to_string()];
    header.extend((0..params.n_users()).map(|i| format!("power_{i}")));
    writer.write_record(&header)?;
    for (c, rep) in reps.iter().enumerate() {
        let mut row = vec![c.to_string(), eq.clusters[c].len().to_string()];
        row.extend(rep.as_slice().iter().map(|v| v.to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    run.write_manifest(
        "equilibria",
        json!({"mode": mode, "grid": grid, "tol": tol, "margin": margin,
               "clusters": reps.len(), "grid_points_checked": eq.points.len()}),
        &["equilibria.csv"],
    )?;
    println!(
        "found {} equilibrium cluster(s) on a {grid}^{} grid",
        reps.len(),
        params.n_users()
    );
    Ok(())
}
