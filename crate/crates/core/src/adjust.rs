//! Dynamic adjustment processes: simultaneous best-response dynamics under an
//! announced rule schedule, intermediate-target generators (fixed relative
//! distance, and maximal relative distance under a capability), geometric
//! interpolation, and the convergence-time bound.

use crate::design::tracking_rates;
use crate::error::{Error, Result};
use crate::model::{best_response, IndividualRule, NetworkParams, PowerProfile, Rule};

/// Convergence test: profile within this relative distance of the target and
/// intervention power below this fraction of the budget.
pub const CONVERGENCE_REL_TOL: f64 = 1e-9;

/// One step of an adjustment process: what was announced and what happened.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub rule: IndividualRule,
    pub target: PowerProfile,
    pub profile: PowerProfile,
    pub intervention_power: f64,
}

/// The per-step record of an adjustment run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub converged: bool,
    pub steps_to_converge: Option<usize>,
}

/// A sequence of intermediate target profiles walked by the adjustment
/// process, monotone from the full-power profile down to the final target.
#[derive(Debug, Clone)]
pub struct TargetSequence {
    pub targets: Vec<PowerProfile>,
    /// Capability required at each step (index 0 pairs with the initial
    /// full-power target and is zero). Empty when the generator has no
    /// network parameters to price steps with.
    pub step_budgets: Vec<f64>,
    /// Steps that ended with budget to spare because every user had already
    /// reached its floor or the per-step distance cap.
    pub budget_slack_steps: Vec<usize>,
}

impl TargetSequence {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn final_target(&self) -> &PowerProfile {
        self.targets.last().expect("sequences are never empty")
    }
}

/// What the device announces over time.
#[derive(Debug, Clone)]
pub enum Schedule {
    /// No intervention at all; users best-respond to zero device power.
    NoIntervention,
    /// The same rule at every step.
    Fixed(IndividualRule),
    /// One rule per step; the last stage repeats once the schedule runs out.
    Staged(Vec<Stage>),
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub rule: IndividualRule,
    pub target: PowerProfile,
}

/// Relative distance from `p` down to `q`: `sum_i (p_i - q_i) / p_i`.
pub fn relative_distance(p: &PowerProfile, q: &PowerProfile) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut acc = 0.0;
    for i in 0..p.len() {
        if p[i] == 0.0 {
            return Err(Error::InvalidProfile(format!(
                "relative distance undefined: p_{i} = 0"
            )));
        }
        acc += (p[i] - q[i]) / p[i];
    }
    Ok(acc)
}

fn profiles_close(a: &PowerProfile, b: &PowerProfile, scales: &[f64]) -> bool {
    (0..a.len()).all(|i| (a[i] - b[i]).abs() <= CONVERGENCE_REL_TOL * scales[i])
}

/// Runs the simultaneous best-response dynamic: at each step every user best
/// responds to the previous profile under the announced rule. Terminates once
/// the profile sits on the schedule's final target with zero intervention
/// power (within tolerance) or when `max_steps` runs out, in which case the
/// trajectory is returned unconverged rather than failing.
pub fn run_adjustment(
    params: &NetworkParams,
    schedule: &Schedule,
    initial: &PowerProfile,
    max_steps: usize,
) -> Result<Trajectory> {
    params.validate_profile(initial)?;
    let scales: Vec<f64> = (0..params.n_users()).map(|i| params.max_power(i)).collect();
    let stage_at = |t: usize| -> Result<(IndividualRule, PowerProfile)> {
        match schedule {
            Schedule::NoIntervention => {
                let zero = IndividualRule::new(
                    params.full_power(),
                    vec![0.0; params.n_users()],
                    params.capability(),
                )?;
                Ok((zero.clone(), zero.target))
            }
            Schedule::Fixed(rule) => Ok((rule.clone(), rule.target.clone())),
            Schedule::Staged(stages) => {
                let s = &stages[(t - 1).min(stages.len() - 1)];
                Ok((s.rule.clone(), s.target.clone()))
            }
        }
    };
    let min_final_step = match schedule {
        Schedule::Staged(stages) => stages.len(),
        _ => 1,
    };
    let (final_rule, final_target) = match schedule {
        Schedule::NoIntervention => stage_at(1)?,
        Schedule::Fixed(rule) => (rule.clone(), rule.target.clone()),
        Schedule::Staged(stages) => {
            if stages.is_empty() {
                return Err(Error::Infeasible("empty schedule".into()));
            }
            let s = stages.last().unwrap();
            (s.rule.clone(), s.target.clone())
        }
    };

    let mut steps = Vec::new();
    let mut current = initial.clone();
    // Already sitting at the final equilibrium: nothing to adjust.
    if min_final_step == 1
        && profiles_close(&current, &final_target, &scales)
        && final_rule.eval(&current)? <= CONVERGENCE_REL_TOL * final_rule.budget
    {
        return Ok(Trajectory {
            steps,
            converged: true,
            steps_to_converge: Some(0),
        });
    }
    for t in 1..=max_steps {
        let (rule, target) = stage_at(t)?;
        let wrapped = match schedule {
            Schedule::NoIntervention => None,
            _ => Some(Rule::Individual(rule.clone())),
        };
        let mut next = current.clone();
        for i in 0..params.n_users() {
            next.set(i, best_response(params, wrapped.as_ref(), &current, i)?);
        }
        let intervention = rule.eval(&next)?;
        steps.push(TrajectoryStep {
            rule: rule.clone(),
            target: target.clone(),
            profile: next.clone(),
            intervention_power: intervention,
        });
        current = next;
        if t >= min_final_step
            && profiles_close(&current, &final_target, &scales)
            && final_rule.eval(&current)? <= CONVERGENCE_REL_TOL * final_rule.budget
        {
            return Ok(Trajectory {
                steps,
                converged: true,
                steps_to_converge: Some(t),
            });
        }
    }
    Ok(Trajectory {
        steps,
        converged: false,
        steps_to_converge: None,
    })
}

/// Capability a step from `from` to `to` demands: the rate construction's
/// common punishment level amplified by each user's deepest deviation, plus
/// the cost of deterring a jump back to full power.
pub fn step_budget_requirement(
    params: &NetworkParams,
    from: &PowerProfile,
    to: &PowerProfile,
) -> Result<f64> {
    let (_, pressure) = tracking_rates(params, from, to)?;
    let mut req = 0.0_f64;
    for i in 0..params.n_users() {
        if to[i] < params.max_power(i) {
            let base = params.interference(from, i) / params.device_tx_gain(i);
            let r = params.max_power(i) / from[i] * pressure
                + (params.max_power(i) - from[i]) * base / from[i];
            req = req.max(r);
        }
    }
    Ok(req)
}

/// Step price of every transition in a sequence (the initial entry is 0);
/// infinite where a transition's relative distance reaches one.
pub fn sequence_budgets(params: &NetworkParams, seq: &TargetSequence) -> Result<Vec<f64>> {
    let mut budgets = vec![0.0];
    for w in seq.targets.windows(2) {
        budgets.push(step_budget_requirement(params, &w[0], &w[1]).unwrap_or(f64::INFINITY));
    }
    Ok(budgets)
}

/// Builds the per-step rules that make the adjustment process track a target
/// sequence exactly: each step's rates come from the tracking construction
/// evaluated at the previous intermediate target.
pub fn rules_for_sequence(
    params: &NetworkParams,
    seq: &TargetSequence,
    margin: f64,
) -> Result<Vec<Stage>> {
    if seq.is_empty() {
        return Err(Error::Infeasible("empty target sequence".into()));
    }
    let mut stages = Vec::with_capacity(seq.len());
    let first = seq.targets[0].clone();
    stages.push(Stage {
        rule: IndividualRule::new(
            first.clone(),
            vec![0.0; params.n_users()],
            params.capability(),
        )?,
        target: first,
    });
    for w in seq.targets.windows(2) {
        let (rates, _) = tracking_rates(params, &w[0], &w[1])?;
        let rates = rates.into_iter().map(|r| r * (1.0 + margin)).collect();
        stages.push(Stage {
            rule: IndividualRule::new(w[1].clone(), rates, params.capability())?,
            target: w[1].clone(),
        });
    }
    Ok(stages)
}

fn validate_sequence_target(params: &NetworkParams, target: &PowerProfile) -> Result<()> {
    if target.len() != params.n_users() {
        return Err(Error::DimensionMismatch {
            expected: params.n_users(),
            got: target.len(),
        });
    }
    for i in 0..params.n_users() {
        if !(target[i] > 0.0) || target[i] > params.max_power(i) {
            return Err(Error::Infeasible(format!(
                "target power of user {i} must lie in (0, P_{i}]"
            )));
        }
    }
    Ok(())
}

const MAX_SEQUENCE_STEPS: usize = 10_000;

/// Generates intermediate targets whose consecutive relative distance is at
/// most `delta`, spending each step's distance on the cheapest-to-deter users
/// first, which keeps the step's capability requirement minimal. The
/// capability itself is deliberately ignored; pair with [`mrd_sequence`] when
/// the budget binds.
pub fn fixed_rd_sequence(
    params: &NetworkParams,
    target: &PowerProfile,
    delta: f64,
) -> Result<TargetSequence> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Infeasible(format!(
            "delta {delta} must lie in (0, 1)"
        )));
    }
    validate_sequence_target(params, target)?;
    let n = params.n_users();
    let mut targets = vec![params.full_power()];
    let mut current = params.full_power();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    while relative_distance(&current, target)? >= 1.0 {
        if targets.len() > MAX_SEQUENCE_STEPS {
            return Err(Error::Infeasible(
                "fixed-distance sequence did not terminate".into(),
            ));
        }
        // Per-step shrink ratios start at 1 (no movement) and are pushed down
        // toward each user's floor until the step's distance budget is spent.
        let mut ratios = vec![1.0; n];
        let mut movable: Vec<usize> = (0..n).filter(|&i| current[i] > target[i]).collect();
        let goal = n as f64 - delta;
        while ratios.iter().sum::<f64>() > goal + 1e-12 && !movable.is_empty() {
            let pick = movable
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let ba = params.interference(&current, a) / params.device_tx_gain(a);
                    let bb = params.interference(&current, b) / params.device_tx_gain(b);
                    ba.partial_cmp(&bb).unwrap()
                })
                .unwrap();
            let floor = target[pick] / current[pick];
            let others: f64 = ratios
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != pick)
                .map(|(_, r)| r)
                .sum();
            ratios[pick] = floor.max(goal - others);
            movable.retain(|&i| i != pick);
        }
        let mut next = current.clone();
        for i in 0..n {
            let v = ratios[i] * current[i];
            next.set(
                i,
                if close(v, target[i]) || v < target[i] {
                    target[i]
                } else {
                    v
                },
            );
        }
        targets.push(next.clone());
        current = next;
    }
    if (0..n).any(|i| !close(current[i], target[i])) {
        targets.push(target.clone());
    } else if let Some(last) = targets.last_mut() {
        *last = target.clone();
    }
    let mut seq = TargetSequence {
        targets,
        step_budgets: Vec::new(),
        budget_slack_steps: Vec::new(),
    };
    seq.step_budgets = sequence_budgets(params, &seq)?;
    Ok(seq)
}

/// Generates the sequence with maximal relative distance per step given an
/// intervention capability: each step moves the cheapest users as far as the
/// distance cap allows; when the capability binds first, the last mover's
/// power is found by bisection so the step prices out at `budget - eps1`.
pub fn mrd_sequence(
    params: &NetworkParams,
    target: &PowerProfile,
    budget: f64,
    eps1: f64,
    eps2: f64,
) -> Result<TargetSequence> {
    validate_sequence_target(params, target)?;
    if !(eps1 > 0.0 && eps1 < 1.0 && eps2 > 0.0 && eps2 < 1.0) {
        return Err(Error::Infeasible("eps1 and eps2 must lie in (0, 1)".into()));
    }
    let n = params.n_users();
    let full = params.full_power();
    let require: f64 = (0..n)
        .map(|i| {
            (params.max_power(i) - target[i]) / target[i]
                * (params.interference(&full, i) / params.device_tx_gain(i))
        })
        .fold(0.0, f64::max);
    if budget - eps1 <= require {
        return Err(Error::Infeasible(format!(
            "budget {budget} does not clear the sequencing requirement {require} + eps1"
        )));
    }
    let allowance = budget - eps1;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let mut targets = vec![full.clone()];
    let mut step_budgets = vec![0.0];
    let mut slack_steps = Vec::new();
    let mut current = full;
    while (0..n).any(|i| !close(current[i], target[i])) {
        if targets.len() > MAX_SEQUENCE_STEPS {
            return Err(Error::Infeasible(
                "maximal-distance sequence did not terminate".into(),
            ));
        }
        let mut movable: Vec<usize> = (0..n).filter(|&i| !close(current[i], target[i])).collect();
        let mut next = current.clone();
        let mut price = step_budget_requirement(params, &current, &next)?;
        let mut budget_bound = false;
        while !movable.is_empty() {
            let pick = movable
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let ba = params.interference(&current, a) / params.device_tx_gain(a);
                    let bb = params.interference(&current, b) / params.device_tx_gain(b);
                    ba.partial_cmp(&bb).unwrap()
                })
                .unwrap();
            let others_ratio: f64 = (0..n)
                .filter(|&j| j != pick)
                .map(|j| next[j] / current[j])
                .sum();
            let distance_cap = (n as f64 - 1.0 + eps2 - others_ratio) * current[pick];
            let deepest = target[pick].max(distance_cap);
            next.set(pick, deepest);
            price = step_budget_requirement(params, &current, &next)?;
            if price < allowance {
                movable.retain(|&i| i != pick);
            } else {
                // Too expensive at the deepest admissible move: bisect the
                // mover's power upward until the step prices out exactly.
                let (mut lo, mut hi) = (deepest, current[pick]);
                while hi - lo > 1e-9 {
                    let mid = 0.5 * (lo + hi);
                    next.set(pick, mid);
                    price = step_budget_requirement(params, &current, &next)?;
                    if price > allowance {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                next.set(pick, hi);
                price = step_budget_requirement(params, &current, &next)?;
                budget_bound = true;
                break;
            }
        }
        // Snap coordinates that landed on their floors.
        for i in 0..n {
            if close(next[i], target[i]) || next[i] < target[i] {
                next.set(i, target[i]);
            }
        }
        if (0..n).all(|i| close(next[i], current[i])) {
            return Err(Error::Infeasible(
                "maximal-distance step made no progress".into(),
            ));
        }
        if !budget_bound {
            slack_steps.push(targets.len());
        }
        targets.push(next.clone());
        step_budgets.push(price);
        current = next;
    }
    Ok(TargetSequence {
        targets,
        step_budgets,
        budget_slack_steps: slack_steps,
    })
}

/// Geometric interpolation from the maximum powers down to the target over
/// `length` profiles; both endpoints are exact.
pub fn geometric_sequence(
    target: &PowerProfile,
    max_powers: &[f64],
    length: usize,
) -> Result<TargetSequence> {
    let n = max_powers.len();
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len(),
        });
    }
    for i in 0..n {
        if !(target[i] > 0.0) || target[i] > max_powers[i] {
            return Err(Error::Infeasible(format!(
                "target of user {i} must lie in (0, P_{i}]"
            )));
        }
    }
    let at_max = (0..n).all(|i| target[i] == max_powers[i]);
    if length < 2 && !at_max {
        return Err(Error::Infeasible(
            "need at least two profiles to leave full power".into(),
        ));
    }
    let length = length.max(1);
    let mut targets = Vec::with_capacity(length);
    for t in 0..length {
        if t == 0 {
            targets.push(PowerProfile::new(max_powers.to_vec()));
        } else if t == length - 1 {
            targets.push(target.clone());
        } else {
            let step = (0..n)
                .map(|i| {
                    let eta = (target[i] / max_powers[i]).powf(1.0 / (length - 1) as f64);
                    eta.powi(t as i32) * max_powers[i]
                })
                .collect();
            targets.push(PowerProfile::new(step));
        }
    }
    Ok(TargetSequence {
        targets,
        step_budgets: Vec::new(),
        budget_slack_steps: Vec::new(),
    })
}

/// Smallest geometric-sequence length whose every transition satisfies both
/// the distance cap and the capability, or an error when none exists up to
/// `max_length`.
pub fn min_geometric_length(
    params: &NetworkParams,
    target: &PowerProfile,
    budget: f64,
    eps1: f64,
    eps2: f64,
    max_length: usize,
) -> Result<usize> {
    validate_sequence_target(params, target)?;
    for length in 2..=max_length {
        let seq = geometric_sequence(target, params.max_powers(), length)?;
        let mut ok = true;
        for w in seq.targets.windows(2) {
            let shrink: f64 = (0..params.n_users())
                .map(|i| (w[0][i] - w[1][i]) / w[0][i])
                .sum();
            if shrink > 1.0 - eps2 {
                ok = false;
                break;
            }
            match step_budget_requirement(params, &w[0], &w[1]) {
                Ok(price) if price <= budget - eps1 => {}
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(length);
        }
    }
    Err(Error::Infeasible(format!(
        "no geometric sequence of length <= {max_length} satisfies the constraints"
    )))
}

/// Upper bound on the minimum number of adjustment steps needed to reach
/// `target` from full power under `budget`. The bound is the largest step
/// count the convergence inequality admits; the true optimum can only be
/// smaller.
pub fn convergence_time_bound(
    params: &NetworkParams,
    target: &PowerProfile,
    budget: f64,
) -> Result<usize> {
    validate_sequence_target(params, target)?;
    let n = params.n_users();
    let shrink: f64 = (0..n)
        .map(|i| (params.max_power(i) - target[i]) / params.max_power(i))
        .sum();
    if shrink < 1.0 {
        return Err(Error::Infeasible(
            "relative distance below one: the fast-convergence design applies directly".into(),
        ));
    }
    let max_ratio = (0..n)
        .map(|i| params.max_power(i) / target[i])
        .fold(f64::MIN, f64::max);
    let max_base = (0..n)
        .map(|i| params.interference(target, i) / params.device_tx_gain(i))
        .fold(f64::MIN, f64::max);
    let floor = (max_ratio - 1.0) * max_base;
    if budget <= floor {
        return Err(Error::Infeasible(format!(
            "budget {budget} does not exceed the bounding requirement {floor}"
        )));
    }
    let c = budget / (max_base * max_ratio) + 1.0 / max_ratio;
    let rhs = n as f64 - 1.0 + 1.0 / c;
    let lhs = |t: usize| -> f64 {
        (0..n)
            .map(|i| (target[i] / params.max_power(i)).powf(1.0 / (t as f64 - 2.0)))
            .sum()
    };
    let mut last = None;
    for t in 3..1_000_000 {
        if lhs(t) < rhs {
            last = Some(t);
        } else {
            break;
        }
    }
    last.ok_or_else(|| Error::Infeasible("convergence inequality admits no step count".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_fast_converge, strong_budget_upper_bound, sustain_budget};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_network(rng: &mut ChaCha8Rng, n: usize) -> NetworkParams {
        let mut gains = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            gains[i + 1][i + 1] = rng.random_range(0.5..2.0);
            gains[i + 1][0] = rng.random_range(0.5..2.0);
            gains[0][i + 1] = rng.random_range(0.5..2.0);
            for j in 0..n {
                if i != j {
                    gains[i + 1][j + 1] = rng.random_range(0.02..0.3);
                }
            }
        }
        let noise = (0..n).map(|_| rng.random_range(0.1..0.4)).collect();
        let max_powers = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
        NetworkParams::new(gains, noise, max_powers, 1e9).unwrap()
    }

    /// Five users, first at full power target and the rest at a tenth; the
    /// relative distance from full power is 3.6.
    fn five_user(rng_seed: u64) -> (NetworkParams, PowerProfile) {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let params = random_network(&mut rng, 5);
        let target = PowerProfile::new(
            (0..5)
                .map(|i| {
                    if i == 0 {
                        params.max_power(i)
                    } else {
                        0.1 * params.max_power(i)
                    }
                })
                .collect(),
        );
        (params, target)
    }

    #[test]
    fn relative_distance_examples() {
        let p = PowerProfile::new(vec![2.0, 2.0]);
        assert_eq!(relative_distance(&p, &p).unwrap(), 0.0);
        let q = PowerProfile::new(vec![1.0, 1.0]);
        assert_eq!(relative_distance(&p, &q).unwrap(), 1.0);
        let (params, target) = five_user(1);
        let d = relative_distance(&params.full_power(), &target).unwrap();
        assert!((d - 3.6).abs() < 1e-12);
        let zero = PowerProfile::new(vec![0.0, 1.0]);
        assert!(relative_distance(&zero, &q).is_err());
    }

    #[test]
    fn no_intervention_jumps_to_full_power_and_stays() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.random_range(1..5);
            let params = random_network(&mut rng, n);
            let initial = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.0..params.max_power(i)))
                    .collect(),
            );
            let traj = run_adjustment(&params, &Schedule::NoIntervention, &initial, 10).unwrap();
            assert!(traj.converged);
            assert_eq!(traj.steps_to_converge, Some(1));
            assert_eq!(traj.steps[0].profile, params.full_power());
        }
    }

    #[test]
    fn fast_rule_converges_in_two_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut done = 0;
        while done < 15 {
            let n = rng.random_range(1..4);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| params.max_power(i) * rng.random_range(0.8..0.98))
                    .collect(),
            );
            let Ok(report) = design_fast_converge(&params, &target, 1e-6) else {
                continue;
            };
            let Rule::Individual(rule) = report.rule else {
                panic!()
            };
            // Arbitrary start: at most two steps.
            let initial = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.0..params.max_power(i)))
                    .collect(),
            );
            let traj =
                run_adjustment(&params, &Schedule::Fixed(rule.clone()), &initial, 10).unwrap();
            assert!(traj.converged, "fast rule failed to converge");
            assert!(traj.steps_to_converge.unwrap() <= 2);
            // Start inside [target, P]: one step.
            let inside = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(target[i]..=params.max_power(i)))
                    .collect(),
            );
            if inside.sup_distance(&target) == 0.0 {
                continue;
            }
            let traj = run_adjustment(&params, &Schedule::Fixed(rule), &inside, 10).unwrap();
            assert_eq!(traj.steps_to_converge, Some(1));
            done += 1;
        }
    }

    #[test]
    fn fast_rule_two_steps_from_every_grid_start() {
        // Exhaustive start sweep on the symmetric toy: h = 1 everywhere,
        // noise 1, P = (2,2), target (1.5, 1.5) with relative distance 0.5.
        let params = NetworkParams::new(
            vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            1e4,
        )
        .unwrap();
        let target = PowerProfile::new(vec![1.5, 1.5]);
        let report = design_fast_converge(&params, &target, 1e-6).unwrap();
        let Rule::Individual(rule) = report.rule else {
            panic!()
        };
        let schedule = Schedule::Fixed(rule);
        for a in 0..=20 {
            for b in 0..=20 {
                let start = PowerProfile::new(vec![0.1 * a as f64, 0.1 * b as f64]);
                if start.sup_distance(&target) == 0.0 {
                    continue;
                }
                let traj = run_adjustment(&params, &schedule, &start, 5).unwrap();
                let steps = traj.steps_to_converge.expect("must converge");
                assert!(
                    steps <= 2,
                    "start {:?} took {steps} steps",
                    start.as_slice()
                );
                if start[0] >= target[0] && start[1] >= target[1] {
                    assert_eq!(steps, 1);
                }
            }
        }
    }

    #[test]
    fn trajectories_stay_inside_the_box_and_record_rule_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.random_range(2..5);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.3..0.9) * params.max_power(i))
                    .collect(),
            );
            let report = crate::design::design_sustain(&params, &target, 1e-6).unwrap();
            let Rule::Individual(rule) = report.rule else {
                panic!()
            };
            let initial = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.0..params.max_power(i)))
                    .collect(),
            );
            let traj = run_adjustment(&params, &Schedule::Fixed(rule), &initial, 20).unwrap();
            for step in &traj.steps {
                params.validate_profile(&step.profile).unwrap();
                let eval = step.rule.eval(&step.profile).unwrap();
                assert_eq!(eval, step.intervention_power);
            }
        }
    }

    #[test]
    fn fixed_rd_single_hop_when_distance_below_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = random_network(&mut rng, 2);
        let target = PowerProfile::new((0..2).map(|i| 0.7 * params.max_power(i)).collect());
        assert!(relative_distance(&params.full_power(), &target).unwrap() < 1.0);
        let seq = fixed_rd_sequence(&params, &target, 0.9).unwrap();
        assert_eq!(seq.targets.len(), 2);
        assert_eq!(seq.targets[0], params.full_power());
        assert_eq!(seq.targets[1], target);
    }

    #[test]
    fn fixed_rd_five_user_step_count() {
        let (params, target) = five_user(1);
        let delta = 0.9; // 1 - min_i target_i / P_i
        let seq = fixed_rd_sequence(&params, &target, delta).unwrap();
        assert_eq!(
            seq.targets.len(),
            5,
            "one user moves per step, then the final hop"
        );
        for w in seq.targets.windows(2) {
            let d = relative_distance(&w[0], &w[1]).unwrap();
            assert!(d <= delta + 1e-9, "per-step distance {d} above delta");
        }
    }

    #[test]
    fn fixed_rd_length_never_exceeds_active_users_plus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..6);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.1..1.0) * params.max_power(i))
                    .collect(),
            );
            let actives = (0..n).filter(|&i| target[i] < params.max_power(i)).count();
            let delta = 1.0
                - (0..n)
                    .map(|i| target[i] / params.max_power(i))
                    .fold(1.0, f64::min);
            if !(delta > 0.0 && delta < 1.0) {
                continue;
            }
            let seq = fixed_rd_sequence(&params, &target, delta).unwrap();
            assert!(
                seq.targets.len() <= actives + 1,
                "length {} above bound {}",
                seq.targets.len(),
                actives + 1
            );
        }
    }

    #[test]
    fn sequences_are_monotone_and_end_on_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let n = rng.random_range(2..5);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.1..0.9) * params.max_power(i))
                    .collect(),
            );
            let seq = fixed_rd_sequence(&params, &target, rng.random_range(0.3..0.95)).unwrap();
            for w in seq.targets.windows(2) {
                for i in 0..n {
                    assert!(w[1][i] <= w[0][i] + 1e-12);
                    assert!(w[1][i] >= target[i] - 1e-12);
                }
            }
            assert_eq!(seq.final_target(), &target);
        }
    }

    #[test]
    fn scheduled_adjustment_tracks_intermediate_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..15 {
            let n = rng.random_range(2..6);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.15..0.9) * params.max_power(i))
                    .collect(),
            );
            let seq = fixed_rd_sequence(&params, &target, 0.8).unwrap();
            let stages = rules_for_sequence(&params, &seq, 1e-6).unwrap();
            let initial = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.0..params.max_power(i)))
                    .collect(),
            );
            let traj = run_adjustment(&params, &Schedule::Staged(stages), &initial, seq.len() + 5)
                .unwrap();
            assert!(traj.converged);
            assert_eq!(traj.steps_to_converge, Some(seq.len()));
            for (step, want) in traj.steps.iter().zip(&seq.targets) {
                assert!(
                    step.profile.sup_distance(want) <= 1e-9,
                    "step missed its intermediate target"
                );
            }
        }
    }

    #[test]
    fn mrd_respects_budget_and_distance_caps() {
        let (params, target) = five_user(1);
        let bound = strong_budget_upper_bound(&params, &target).unwrap();
        let budget = 1.2 * bound;
        let (eps1, eps2) = (1e-3, 1e-3);
        let seq = mrd_sequence(&params, &target, budget, eps1, eps2).unwrap();
        assert_eq!(seq.final_target(), &target);
        for (t, w) in seq.targets.windows(2).enumerate() {
            let shrink: f64 = (0..5).map(|i| (w[0][i] - w[1][i]) / w[0][i]).sum();
            assert!(shrink <= 1.0 - eps2 + 1e-9, "distance cap violated");
            let price = seq.step_budgets[t + 1];
            assert!(
                price <= budget - eps1 + 1e-6,
                "step price {price} above allowance"
            );
        }
    }

    #[test]
    fn mrd_rejects_insufficient_budget() {
        let (params, target) = five_user(1);
        assert!(matches!(
            mrd_sequence(&params, &target, 1e-6, 1e-3, 1e-3),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn mrd_with_roomy_budget_matches_fixed_rd_length() {
        let eps2 = 1e-3;
        let (params, target) = five_user(1);
        let mrd = mrd_sequence(&params, &target, 1e9, 1e-3, eps2).unwrap();
        let rd = fixed_rd_sequence(&params, &target, 1.0 - eps2).unwrap();
        assert_eq!(mrd.targets.len(), rd.targets.len());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.random_range(2..5);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| rng.random_range(0.1..0.8) * params.max_power(i))
                    .collect(),
            );
            let mrd = mrd_sequence(&params, &target, 1e9, 1e-3, eps2).unwrap();
            let rd = fixed_rd_sequence(&params, &target, 1.0 - eps2).unwrap();
            assert_eq!(mrd.targets.len(), rd.targets.len());
        }
    }

    #[test]
    fn geometric_endpoints_and_flat_coordinates() {
        let target = PowerProfile::new(vec![1.0, 4.0]);
        let seq = geometric_sequence(&target, &[2.0, 4.0], 4).unwrap();
        assert_eq!(seq.targets[0], PowerProfile::new(vec![2.0, 4.0]));
        assert_eq!(seq.targets[3], target);
        for step in &seq.targets {
            assert_eq!(step[1], 4.0, "coordinate at its maximum never moves");
        }
        let two = geometric_sequence(&target, &[2.0, 4.0], 2).unwrap();
        assert_eq!(two.targets.len(), 2);
        assert!(geometric_sequence(&target, &[2.0, 4.0], 1).is_err());
    }

    #[test]
    fn convergence_bound_shrinks_with_budget_and_floors_at_three() {
        // Two users just past the distance-one boundary: with a huge budget the
        // inequality pins the bound at its floor.
        let params = NetworkParams::new(
            vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.1],
                vec![1.0, 0.1, 1.0],
            ],
            vec![0.2, 0.2],
            vec![10.0, 10.0],
            1e9,
        )
        .unwrap();
        let target = PowerProfile::new(vec![4.5, 4.5]);
        let modest = convergence_time_bound(&params, &target, 50.0).unwrap();
        let huge = convergence_time_bound(&params, &target, 1e9).unwrap();
        assert!(huge <= modest);
        assert_eq!(huge, 3);
    }

    #[test]
    fn convergence_bound_rejects_near_targets_and_small_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let params = random_network(&mut rng, 2);
        let near = PowerProfile::new((0..2).map(|i| 0.9 * params.max_power(i)).collect());
        assert!(convergence_time_bound(&params, &near, 100.0).is_err());
        let far = PowerProfile::new((0..2).map(|i| 0.1 * params.max_power(i)).collect());
        assert!(convergence_time_bound(&params, &far, 1e-9).is_err());
    }

    #[test]
    fn mrd_measured_time_within_bound_on_five_user_sweep() {
        let (params, target) = five_user(1);
        let full = params.full_power();
        let require: f64 = (0..5)
            .map(|i| {
                (params.max_power(i) - target[i]) / target[i]
                    * (params.interference(&full, i) / params.device_tx_gain(i))
            })
            .fold(0.0, f64::max);
        for k in 0..8 {
            let budget = require * (1.05 + 0.4 * k as f64);
            let Ok(seq) = mrd_sequence(&params, &target, budget, 1e-3, 1e-3) else {
                continue;
            };
            let Ok(bound) = convergence_time_bound(&params, &target, budget) else {
                continue;
            };
            assert!(
                seq.targets.len() <= bound,
                "sequence length {} exceeded bound {bound} at budget {budget}",
                seq.targets.len()
            );
        }
    }

    #[test]
    fn sustain_budget_smaller_than_step_requirements() {
        // Sequencing never prices below the plain sustainment floor.
        let (params, target) = five_user(1);
        let floor = sustain_budget(&params, &target).unwrap();
        let seq = mrd_sequence(&params, &target, 1e6, 1e-3, 1e-3).unwrap();
        let max_step = seq.step_budgets.iter().cloned().fold(0.0, f64::max);
        assert!(max_step >= floor * 0.99);
    }
}
