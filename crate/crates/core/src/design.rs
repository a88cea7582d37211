//! Closed-form designers and budget calculators for first-order intervention
//! rules: plain sustainment, strong sustainment (unique equilibrium), fast
//! convergence, aggregate monitoring, non-uniqueness witnesses under aggregate
//! monitoring, and the extreme (all-or-nothing) rule.

use crate::error::{Error, Result};
use crate::model::{
    is_nash, strongly_sustains_on_grid, AggregateRule, ExtremeRule, IndividualRule, NetworkParams,
    PowerProfile, Rule,
};

/// Default multiplicative margin used to realize strict inequalities in
/// floating point: thresholds are multiplied by `1 + margin`.
pub const DEFAULT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMode {
    Sustain,
    StrongSustain,
    FastConverge,
    AggregateSustain,
}

/// Outcome of a rule design: the rule itself plus the thresholds it was built
/// from.
#[derive(Debug, Clone)]
pub struct DesignReport {
    pub rule: Rule,
    /// Per-user rate thresholds at equality (before the margin is applied).
    /// For aggregate designs these are the per-user aggregate-rate thresholds
    /// whose maximum the single rate must exceed.
    pub min_rates: Vec<f64>,
    /// The mode's budget requirement. Sustain and aggregate modes report the
    /// exact minimum; strong sustainment reports the requirement induced by
    /// the chosen rates; fast convergence reports the closed-form bound.
    pub min_budget: f64,
    pub mode: DesignMode,
    pub margin: f64,
    /// Users whose target lies strictly below their maximum power; only these
    /// need deterrence.
    pub active_users: Vec<usize>,
}

fn validate_target(params: &NetworkParams, target: &PowerProfile) -> Result<()> {
    if target.len() != params.n_users() {
        return Err(Error::DimensionMismatch {
            expected: params.n_users(),
            got: target.len(),
        });
    }
    for i in 0..params.n_users() {
        let t = target[i];
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::Infeasible(format!(
                "target power of user {i} must be strictly positive (no rule can deter p_i = 0)"
            )));
        }
        if t > params.max_power(i) {
            return Err(Error::InvalidProfile(format!(
                "target power of user {i} exceeds its maximum"
            )));
        }
    }
    Ok(())
}

/// Users with `target_i < P_i`.
pub fn active_users(params: &NetworkParams, target: &PowerProfile) -> Vec<usize> {
    (0..params.n_users())
        .filter(|&i| target[i] < params.max_power(i))
        .collect()
}

/// Interference-plus-noise at user `i` normalized by the device-to-user gain,
/// with the other users at `others`.
fn deterrence_base(params: &NetworkParams, others: &PowerProfile, i: usize) -> f64 {
    params.interference(others, i) / params.device_tx_gain(i)
}

/// Minimum rate at which user `i` prefers its target over any deviation, with
/// the other users at their targets.
pub fn sustain_rate_threshold(params: &NetworkParams, target: &PowerProfile, i: usize) -> f64 {
    deterrence_base(params, target, i) / target[i]
}

/// Minimum capability needed to sustain `target` with a first-order rule on
/// individual powers (also the exact threshold under aggregate monitoring).
/// Zero when no user needs deterrence.
pub fn sustain_budget(params: &NetworkParams, target: &PowerProfile) -> Result<f64> {
    validate_target(params, target)?;
    Ok(active_users(params, target)
        .into_iter()
        .map(|i| (params.max_power(i) - target[i]) * sustain_rate_threshold(params, target, i))
        .fold(0.0, f64::max))
}

/// Designs a first-order rule on individual powers that sustains `target`:
/// each active user's rate sits `1 + margin` above its threshold, inactive
/// users get rate zero.
pub fn design_sustain(
    params: &NetworkParams,
    target: &PowerProfile,
    margin: f64,
) -> Result<DesignReport> {
    validate_target(params, target)?;
    let active = active_users(params, target);
    let mut min_rates = vec![0.0; params.n_users()];
    for &i in &active {
        min_rates[i] = sustain_rate_threshold(params, target, i);
    }
    let min_budget = sustain_budget(params, target)?;
    if params.capability() < min_budget {
        return Err(Error::Infeasible(format!(
            "capability {} below the sustainment threshold {min_budget}",
            params.capability()
        )));
    }
    let rates: Vec<f64> = min_rates.iter().map(|r| r * (1.0 + margin)).collect();
    let rule = IndividualRule::new(target.clone(), rates, params.capability())?;
    Ok(DesignReport {
        rule: Rule::Individual(rule),
        min_rates,
        min_budget,
        mode: DesignMode::Sustain,
        margin,
        active_users: active,
    })
}

fn check_ordering(n: usize, ordering: &[usize]) -> Result<()> {
    if ordering.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ordering.len(),
        });
    }
    let mut seen = vec![false; n];
    for &i in ordering {
        if i >= n || seen[i] {
            return Err(Error::InvalidParams(
                "ordering must be a permutation of the users".into(),
            ));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Canonical user ordering for the sequential strong-sustainment construction:
/// active users first (by index), then the rest.
pub fn canonical_ordering(params: &NetworkParams, target: &PowerProfile) -> Vec<usize> {
    let active = active_users(params, target);
    let mut order = active.clone();
    order.extend((0..params.n_users()).filter(|i| !active.contains(i)));
    order
}

/// Designs a rule that strongly sustains `target` (unique equilibrium of the
/// induced game). Rates are chosen sequentially from the last ordered user up
/// to the first; the budget requirement reported is the maximum induced by the
/// chosen rates, which the capability must strictly exceed.
pub fn design_strong_sustain(
    params: &NetworkParams,
    target: &PowerProfile,
    margin: f64,
    ordering: Option<&[usize]>,
) -> Result<DesignReport> {
    validate_target(params, target)?;
    let canonical = canonical_ordering(params, target);
    let order: Vec<usize> = match ordering {
        Some(o) => {
            check_ordering(params.n_users(), o)?;
            o.to_vec()
        }
        None => canonical,
    };
    let n = params.n_users();
    let active = active_users(params, target);
    let is_active: Vec<bool> = (0..n).map(|i| active.contains(&i)).collect();
    let mut min_rates = vec![0.0; n];
    let mut rates = vec![0.0; n];
    // Walk the ordering back to front; each threshold uses the already-chosen
    // rates of later users.
    for pos in (0..n).rev() {
        let i = order[pos];
        if !is_active[i] {
            continue;
        }
        let mut later_pressure = 0.0;
        let mut interference = params.noise(i);
        for (q, &j) in order.iter().enumerate() {
            if j == i {
                continue;
            }
            if q > pos {
                later_pressure += rates[j] * (params.max_power(j) - target[j]);
                interference += params.cross_gain(i, j) * params.max_power(j);
            } else {
                interference += params.cross_gain(i, j) * target[j];
            }
        }
        let threshold =
            later_pressure / target[i] + interference / (target[i] * params.device_tx_gain(i));
        min_rates[i] = threshold;
        rates[i] = threshold * (1.0 + margin);
    }
    // Budget requirement induced by the chosen rates.
    let mut min_budget = 0.0_f64;
    for pos in 0..n {
        let i = order[pos];
        if !is_active[i] {
            continue;
        }
        let mut later_pressure = 0.0;
        let mut interference = params.noise(i);
        for (q, &j) in order.iter().enumerate() {
            if j == i {
                continue;
            }
            if q > pos {
                later_pressure += rates[j] * (params.max_power(j) - target[j]);
                interference += params.cross_gain(i, j) * params.max_power(j);
            } else {
                interference += params.cross_gain(i, j) * target[j];
            }
        }
        let req = params.max_power(i) / target[i] * later_pressure
            + (params.max_power(i) - target[i]) * interference
                / (target[i] * params.device_tx_gain(i));
        min_budget = min_budget.max(req);
    }
    if !active.is_empty() && params.capability() <= min_budget {
        return Err(Error::Infeasible(format!(
            "capability {} does not exceed the strong-sustainment requirement {min_budget}",
            params.capability()
        )));
    }
    let rule = IndividualRule::new(target.clone(), rates, params.capability())?;
    Ok(DesignReport {
        rule: Rule::Individual(rule),
        min_rates,
        min_budget,
        mode: DesignMode::StrongSustain,
        margin,
        active_users: active,
    })
}

/// Closed-form upper bound on the minimum capability for strong sustainment,
/// evaluated for the canonical ordering. Coincides with the sequential
/// equality construction's requirement.
pub fn strong_budget_upper_bound(params: &NetworkParams, target: &PowerProfile) -> Result<f64> {
    validate_target(params, target)?;
    let order = canonical_ordering(params, target);
    let n = params.n_users();
    let mut bound = 0.0;
    let mut prefix_product = 1.0;
    for pos in 0..n {
        let i = order[pos];
        let mut interference = params.noise(i);
        for (q, &j) in order.iter().enumerate() {
            if j == i {
                continue;
            }
            if q > pos {
                interference += params.cross_gain(i, j) * params.max_power(j);
            } else {
                interference += params.cross_gain(i, j) * target[j];
            }
        }
        bound += prefix_product * (params.max_power(i) - target[i]) * interference
            / (target[i] * params.device_tx_gain(i));
        prefix_product *= params.max_power(i) / target[i];
    }
    Ok(bound)
}

/// Relative distance of `target` below the `from` profile:
/// `sum_i (from_i - target_i) / from_i`.
fn shrink_sum(from: &PowerProfile, target: &PowerProfile) -> f64 {
    (0..from.len())
        .map(|i| (from[i] - target[i]) / from[i])
        .sum()
}

/// Rates that make every user's one-shot best response from anywhere in the
/// box `[target, from]` land exactly on `target`, solved at equality: the
/// coupled conditions become linear and collapse to a single scalar.
///
/// Returns `(rates, pressure)` where `pressure` is the common punishment level
/// `sum_j rates_j (from_j - target_j)`, which is also the budget requirement
/// the caller scales for strictness. Requires the shrink sum below one.
///
/// With `from` equal to the maximum powers this is the fast-convergence
/// design; with `from` an intermediate profile it is the per-step construction
/// used by scheduled adjustment.
pub fn tracking_rates(
    params: &NetworkParams,
    from: &PowerProfile,
    target: &PowerProfile,
) -> Result<(Vec<f64>, f64)> {
    let n = params.n_users();
    if from.len() != n || target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: from.len().min(target.len()),
        });
    }
    for i in 0..n {
        if target[i] <= 0.0 || target[i] > from[i] + 1e-12 * from[i].abs().max(1.0) {
            return Err(Error::Infeasible(format!(
                "need 0 < target_{i} <= from_{i} for tracking rates"
            )));
        }
    }
    let shrink = shrink_sum(from, target);
    if shrink >= 1.0 {
        return Err(Error::Infeasible(format!(
            "relative distance {shrink} >= 1; use intermediate targets (adjustment module)"
        )));
    }
    // Users still below their true maximum need deterrence even if they do not
    // move this step.
    let active: Vec<usize> = (0..n)
        .filter(|&i| target[i] < params.max_power(i))
        .collect();
    let mut weighted = 0.0;
    for &j in &active {
        let mu = (from[j] - target[j]) / from[j];
        weighted += mu * deterrence_base(params, from, j);
    }
    let pressure = weighted / (1.0 - shrink);
    let mut rates = vec![0.0; n];
    for &i in &active {
        rates[i] = (pressure + deterrence_base(params, from, i)) / from[i];
    }
    Ok((rates, pressure))
}

/// Closed-form capability bound for strong sustainment with convergence in at
/// most two steps. Requires the target's relative distance below the maximum
/// profile to be under one.
pub fn fast_budget_bound(params: &NetworkParams, target: &PowerProfile) -> Result<f64> {
    validate_target(params, target)?;
    let full = params.full_power();
    let shrink = shrink_sum(&full, target);
    if shrink >= 1.0 {
        return Err(Error::Infeasible(format!(
            "relative distance {shrink} >= 1; use intermediate targets (adjustment module)"
        )));
    }
    let mut acc = 0.0;
    for i in 0..params.n_users() {
        acc += (params.max_power(i) - target[i]) * deterrence_base(params, &full, i)
            / params.max_power(i);
    }
    Ok(acc / (1.0 - shrink))
}

/// Designs a rule that strongly sustains `target` and brings best-response
/// dynamics to it in at most two steps (one step from inside `[target, P]`).
pub fn design_fast_converge(
    params: &NetworkParams,
    target: &PowerProfile,
    margin: f64,
) -> Result<DesignReport> {
    validate_target(params, target)?;
    let full = params.full_power();
    let (min_rates, _) = tracking_rates(params, &full, target)?;
    let rates: Vec<f64> = min_rates.iter().map(|r| r * (1.0 + margin)).collect();
    let min_budget = fast_budget_bound(params, target)?;
    // Requirement induced by the margin-scaled rates; capability must exceed it.
    let active = active_users(params, target);
    let mut induced = 0.0_f64;
    for &i in &active {
        let mut pressure_others = 0.0;
        for &j in &active {
            if j != i {
                pressure_others += rates[j] * (params.max_power(j) - target[j]);
            }
        }
        let req = params.max_power(i) / target[i] * pressure_others
            + (params.max_power(i) - target[i]) * deterrence_base(params, &full, i) / target[i];
        induced = induced.max(req);
    }
    if !active.is_empty() && params.capability() <= induced {
        return Err(Error::Infeasible(format!(
            "capability {} does not exceed the fast-convergence requirement {induced}",
            params.capability()
        )));
    }
    let rule = IndividualRule::new(target.clone(), rates, params.capability())?;
    Ok(DesignReport {
        rule: Rule::Individual(rule),
        min_rates,
        min_budget,
        mode: DesignMode::FastConverge,
        margin,
        active_users: active,
    })
}

/// Per-user aggregate-rate threshold; the single aggregate rate must reach the
/// maximum of these.
pub fn aggregate_rate_threshold(params: &NetworkParams, target: &PowerProfile, i: usize) -> f64 {
    sustain_rate_threshold(params, target, i) / params.device_rx_gain(i)
}

/// Designs a first-order rule on aggregate receive power that sustains
/// `target`. The capability threshold is identical to the individual-power
/// case.
pub fn design_aggregate(
    params: &NetworkParams,
    target: &PowerProfile,
    margin: f64,
) -> Result<DesignReport> {
    validate_target(params, target)?;
    let active = active_users(params, target);
    let mut min_rates = vec![0.0; params.n_users()];
    for &i in &active {
        min_rates[i] = aggregate_rate_threshold(params, target, i);
    }
    let rate = min_rates.iter().fold(0.0_f64, |a, b| a.max(*b)) * (1.0 + margin);
    let min_budget = sustain_budget(params, target)?;
    if params.capability() < min_budget {
        return Err(Error::Infeasible(format!(
            "capability {} below the sustainment threshold {min_budget}",
            params.capability()
        )));
    }
    let weights = params.device_rx_gains();
    let target_aggregate: f64 = weights
        .iter()
        .zip(target.as_slice())
        .map(|(w, p)| w * p)
        .sum();
    let rule = AggregateRule::new(rate, target_aggregate, weights, params.capability())?;
    Ok(DesignReport {
        rule: Rule::Aggregate(rule),
        min_rates,
        min_budget,
        mode: DesignMode::AggregateSustain,
        margin,
        active_users: active,
    })
}

/// Per-user capability threshold under aggregate monitoring (same expression
/// as the individual case).
pub fn aggregate_budget_threshold(params: &NetworkParams, target: &PowerProfile, i: usize) -> f64 {
    (params.max_power(i) - target[i]) * sustain_rate_threshold(params, target, i)
}

/// Searches the aggregate-preserving hyperplane near `target` for another
/// equilibrium of the game induced by `rule`. Returns `None` when no user pair
/// satisfies the ordering condition that makes the search direction safe, or
/// when no nearby point checks out as an equilibrium.
pub fn aggregate_nonuniqueness_witness(
    params: &NetworkParams,
    rule: &AggregateRule,
    target: &PowerProfile,
    epsilon: f64,
) -> Result<Option<PowerProfile>> {
    validate_target(params, target)?;
    let wrapped = Rule::Aggregate(rule.clone());
    if !is_nash(params, Some(&wrapped), target, 1e-9)? {
        return Err(Error::Infeasible("rule does not sustain the target".into()));
    }
    let active = active_users(params, target);
    if active.len() < 2 {
        return Ok(None);
    }
    let alpha: Vec<f64> = active
        .iter()
        .map(|&i| aggregate_rate_threshold(params, target, i))
        .collect();
    let budget: Vec<f64> = active
        .iter()
        .map(|&i| aggregate_budget_threshold(params, target, i))
        .collect();
    let alpha_max = alpha.iter().cloned().fold(f64::MIN, f64::max);
    let budget_max = budget.iter().cloned().fold(f64::MIN, f64::max);
    let ok = |v: f64, other: f64, max: f64| (v == max && v > other) || (v < max && other < max);
    let mut pair = None;
    'outer: for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            if i == j {
                continue;
            }
            if ok(alpha[a], alpha[b], alpha_max) && ok(budget[a], budget[b], budget_max) {
                pair = Some((i, j));
                break 'outer;
            }
        }
    }
    let Some((i, j)) = pair else {
        return Ok(None);
    };
    // Move user i up and user j down along the aggregate-preserving direction
    // e_i / h_0i - e_j / h_0j, stepping epsilon/10 at a time (both signs).
    let wi = params.device_rx_gain(i);
    let wj = params.device_rx_gain(j);
    let dir_norm = (1.0 / (wi * wi) + 1.0 / (wj * wj)).sqrt();
    let max_step = 0.99 * epsilon / dir_norm;
    for sign in [1.0, -1.0] {
        for k in 1..=9 {
            let s = sign * max_step * k as f64 / 10.0;
            let mut q = target.clone();
            q.set(i, target[i] + s / wi);
            q.set(j, target[j] - s / wj);
            let inside = (0..params.n_users()).all(|u| q[u] > 0.0 && q[u] <= params.max_power(u));
            if !inside {
                continue;
            }
            if is_nash(params, Some(&wrapped), &q, 1e-9)? {
                return Ok(Some(q));
            }
        }
    }
    Ok(None)
}

/// Builds the extreme rule for `target` and predicts its equilibrium set:
/// `{target, P}` when the capability covers the sustainment threshold,
/// `{P}` otherwise (and `{P}` alone when the target is `P` itself).
pub fn extreme_rule(
    params: &NetworkParams,
    target: &PowerProfile,
) -> Result<(ExtremeRule, Vec<PowerProfile>)> {
    validate_target(params, target)?;
    let rule = ExtremeRule {
        target: target.clone(),
        budget: params.capability(),
    };
    let full = params.full_power();
    let prediction = if target == &full {
        vec![full]
    } else if params.capability() >= sustain_budget(params, target)? {
        vec![target.clone(), full]
    } else {
        vec![full]
    };
    Ok((rule, prediction))
}

/// Estimates the minimum capability at which some first-order rule strongly
/// sustains `target`, by bisecting on the budget and checking candidate rate
/// vectors against grid enumeration. The returned value is the smallest budget
/// found to work; it brackets the true minimum from above within the bisection
/// tolerance.
pub fn simulated_strong_sustain_budget(
    params: &NetworkParams,
    target: &PowerProfile,
    grid_points_per_axis: usize,
    tol: f64,
    margin: f64,
) -> Result<f64> {
    validate_target(params, target)?;
    let floor = sustain_budget(params, target)?;
    if floor == 0.0 {
        return Ok(0.0);
    }
    // Rate families to try at each candidate budget: the sequential
    // strong-sustainment rates and the plain sustainment rates.
    let roomy = params.with_capability(f64::MAX / 4.0)?;
    let strong = design_strong_sustain(&roomy, target, margin, None)?;
    let plain = design_sustain(&roomy, target, margin)?;
    let families: Vec<Vec<f64>> = [&strong.rule, &plain.rule]
        .iter()
        .filter_map(|r| match r {
            Rule::Individual(ir) => Some(ir.rates.clone()),
            _ => None,
        })
        .collect();
    let works = |budget: f64| -> Result<bool> {
        for rates in &families {
            let rule =
                Rule::Individual(IndividualRule::new(target.clone(), rates.clone(), budget)?);
            if strongly_sustains_on_grid(params, &rule, target, grid_points_per_axis, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let mut hi = strong.min_budget * (1.0 + 1e-3) + 1e-12;
    let mut tries = 0;
    while !works(hi)? {
        hi *= 2.0;
        tries += 1;
        if tries > 8 {
            return Err(Error::Infeasible(
                "no candidate rule strongly sustains the target at any probed budget".into(),
            ));
        }
    }
    let mut lo = 0.5 * floor;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if works(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::enumerate_equilibria;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> NetworkParams {
        NetworkParams::new(
            vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
                vec![1.0, 1.0, 1.0],
            ],
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            10.0,
        )
        .unwrap()
    }

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

    fn random_target(rng: &mut ChaCha8Rng, params: &NetworkParams) -> PowerProfile {
        PowerProfile::new(
            (0..params.n_users())
                .map(|i| rng.random_range(0.1..0.9) * params.max_power(i))
                .collect(),
        )
    }

    #[test]
    fn sustain_toy_thresholds() {
        let params = toy();
        let target = PowerProfile::new(vec![1.0, 1.0]);
        let report = design_sustain(&params, &target, 1e-6).unwrap();
        assert!((report.min_rates[0] - 2.0).abs() < 1e-12);
        assert!((report.min_budget - 2.0).abs() < 1e-12);
        assert!(is_nash(&params, Some(&report.rule), &target, 1e-9).unwrap());
    }

    #[test]
    fn sustain_full_power_target_is_trivial() {
        let params = toy();
        let target = params.full_power();
        let report = design_sustain(&params, &target, 1e-6).unwrap();
        assert!(report.active_users.is_empty());
        assert_eq!(report.min_budget, 0.0);
        assert!(report.min_rates.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn sustain_rejects_zero_target_and_small_capability() {
        let params = toy();
        assert!(design_sustain(&params, &PowerProfile::new(vec![0.0, 1.0]), 1e-6).is_err());
        let starved = params.with_capability(0.5).unwrap();
        let target = PowerProfile::new(vec![1.0, 1.0]);
        assert!(matches!(
            design_sustain(&starved, &target, 1e-6),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn sustain_budget_matches_bisection_oracle() {
        // Brute-force oracle: bisect on the capability until is_nash(target)
        // flips, using freshly designed minimal rates at each probe.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let params = random_network(&mut rng, 2);
            let target = random_target(&mut rng, &params);
            let expected = sustain_budget(&params, &target).unwrap();
            let probe = |cap: f64| {
                let p = params.with_capability(cap).unwrap();
                match design_sustain(&p, &target, 1e-6) {
                    Ok(rep) => is_nash(&p, Some(&rep.rule), &target, 1e-9).unwrap(),
                    Err(_) => false,
                }
            };
            let (mut lo, mut hi) = (1e-6, expected * 4.0 + 1.0);
            assert!(probe(hi));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if probe(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!(
                (hi - expected).abs() <= 1e-3 * expected.max(1.0),
                "bisection {hi} vs closed form {expected}"
            );
        }
    }

    #[test]
    fn necessity_of_rates_and_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let params = random_network(&mut rng, 3);
            let target = random_target(&mut rng, &params);
            let report = design_sustain(&params, &target, 1e-6).unwrap();
            assert!(is_nash(&params, Some(&report.rule), &target, 1e-9).unwrap());
            let Rule::Individual(rule) = &report.rule else {
                panic!()
            };
            for &i in &report.active_users {
                let mut rates = rule.rates.clone();
                rates[i] = 0.99 * report.min_rates[i];
                let weak = Rule::Individual(
                    IndividualRule::new(target.clone(), rates, params.capability()).unwrap(),
                );
                assert!(!is_nash(&params, Some(&weak), &target, 1e-9).unwrap());
            }
            if report.min_budget > 0.0 {
                let weak = Rule::Individual(
                    IndividualRule::new(
                        target.clone(),
                        rule.rates.clone(),
                        0.99 * report.min_budget,
                    )
                    .unwrap(),
                );
                assert!(!is_nash(&params, Some(&weak), &target, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn perturbing_a_sustained_target_breaks_equilibrium() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let params = random_network(&mut rng, 3);
            let target = random_target(&mut rng, &params);
            let report = design_sustain(&params, &target, 1e-6).unwrap();
            assert!(is_nash(&params, Some(&report.rule), &target, 1e-9).unwrap());
            for i in 0..3 {
                let bumped = target.with(i, (1.1 * target[i]).min(params.max_power(i)));
                if bumped[i] == target[i] {
                    continue;
                }
                assert!(
                    !is_nash(&params, Some(&report.rule), &bumped, 1e-9).unwrap(),
                    "a 10% bump on one coordinate must not be an equilibrium"
                );
            }
        }
    }

    #[test]
    fn strong_sustain_single_active_user_matches_sustain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let params = random_network(&mut rng, 3);
            let mut target = params.full_power();
            target.set(1, 0.4 * params.max_power(1));
            let strong = design_strong_sustain(&params, &target, 1e-6, None).unwrap();
            let plain = design_sustain(&params, &target, 1e-6).unwrap();
            assert!(
                (strong.min_budget - plain.min_budget).abs() < 1e-9 * plain.min_budget.max(1.0)
            );
            let bound = strong_budget_upper_bound(&params, &target).unwrap();
            assert!((bound - plain.min_budget).abs() < 1e-9 * bound.max(1.0));
        }
    }

    #[test]
    fn strong_sustain_equality_requirement_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let params = random_network(&mut rng, 4);
            let target = random_target(&mut rng, &params);
            let report = design_strong_sustain(&params, &target, 0.0, None).unwrap();
            let bound = strong_budget_upper_bound(&params, &target).unwrap();
            assert!(
                (report.min_budget - bound).abs() <= 1e-9 * bound.max(1.0),
                "induced requirement {} vs closed form {bound}",
                report.min_budget
            );
        }
    }

    #[test]
    fn strong_sustain_unique_on_toy_grid() {
        let params = toy();
        let target = PowerProfile::new(vec![1.0, 1.0]);
        let report = design_strong_sustain(&params, &target, 1e-6, None).unwrap();
        let eq = enumerate_equilibria(&params, Some(&report.rule), 41, 1e-9).unwrap();
        let reps = eq.representatives();
        assert_eq!(reps.len(), 1);
        assert!(reps[0].sup_distance(&target) < 1e-12);
    }

    #[test]
    fn budget_bound_ordering_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(2..5);
            let params = random_network(&mut rng, n);
            let target = random_target(&mut rng, &params);
            let pb1 = sustain_budget(&params, &target).unwrap();
            let strong = strong_budget_upper_bound(&params, &target).unwrap();
            assert!(
                strong >= pb1 * (1.0 - 1e-12),
                "strong bound {strong} below floor {pb1}"
            );
        }
    }

    #[test]
    fn fast_bound_dominates_strong_bound_on_feasible_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut checked = 0;
        while checked < 100 {
            let n = rng.random_range(1..4);
            let params = random_network(&mut rng, n);
            let target = PowerProfile::new(
                (0..n)
                    .map(|i| params.max_power(i) * rng.random_range(0.75..1.0))
                    .collect(),
            );
            let Ok(fast) = fast_budget_bound(&params, &target) else {
                continue;
            };
            let strong = strong_budget_upper_bound(&params, &target).unwrap();
            assert!(
                fast >= strong * (1.0 - 1e-9),
                "fast {fast} below strong {strong}"
            );
            checked += 1;
        }
    }

    #[test]
    fn fast_converge_single_user_reduces_to_sustain() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let params = random_network(&mut rng, 1);
        let target = PowerProfile::new(vec![0.6 * params.max_power(0)]);
        if shrink_ok(&params, &target) {
            let fast = design_fast_converge(&params, &target, 1e-6).unwrap();
            let plain = design_sustain(&params, &target, 1e-6).unwrap();
            assert!((fast.min_rates[0] - plain.min_rates[0]).abs() < 1e-9);
            assert!((fast.min_budget - plain.min_budget).abs() < 1e-9 * plain.min_budget.max(1.0));
        }
    }

    fn shrink_ok(params: &NetworkParams, target: &PowerProfile) -> bool {
        shrink_sum(&params.full_power(), target) < 1.0
    }

    #[test]
    fn fast_converge_rejects_distant_targets() {
        let params = toy();
        let target = PowerProfile::new(vec![0.5, 0.5]);
        assert!(matches!(
            design_fast_converge(&params, &target, 1e-6),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn aggregate_toy_thresholds() {
        let params = toy();
        let target = PowerProfile::new(vec![1.0, 1.0]);
        let report = design_aggregate(&params, &target, 1e-6).unwrap();
        let Rule::Aggregate(rule) = &report.rule else {
            panic!()
        };
        assert!(rule.rate >= 2.0 && rule.rate < 2.001);
        assert!((report.min_budget - 2.0).abs() < 1e-12);
        assert!(is_nash(&params, Some(&report.rule), &target, 1e-9).unwrap());
    }

    #[test]
    fn aggregate_budget_equals_individual_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let n = rng.random_range(1..5);
            let params = random_network(&mut rng, n);
            let target = random_target(&mut rng, &params);
            let agg = design_aggregate(&params, &target, 1e-6).unwrap();
            let ind = design_sustain(&params, &target, 1e-6).unwrap();
            assert_eq!(agg.min_budget, ind.min_budget);
        }
    }

    #[test]
    fn thresholds_invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = random_network(&mut rng, 3);
        let target = random_target(&mut rng, &params);
        let perm = [2usize, 0, 1];
        let mut gains = vec![vec![0.0; 4]; 4];
        for i in 0..3 {
            gains[i + 1][0] = params.device_tx_gain(perm[i]);
            gains[0][i + 1] = params.device_rx_gain(perm[i]);
            for j in 0..3 {
                gains[i + 1][j + 1] = if i == j {
                    params.direct_gain(perm[i])
                } else {
                    params.cross_gain(perm[i], perm[j])
                };
            }
        }
        let permuted = NetworkParams::new(
            gains,
            perm.iter().map(|&i| params.noise(i)).collect(),
            perm.iter().map(|&i| params.max_power(i)).collect(),
            params.capability(),
        )
        .unwrap();
        let ptarget = PowerProfile::new(perm.iter().map(|&i| target[i]).collect());
        let a = design_sustain(&params, &target, 1e-6).unwrap();
        let b = design_sustain(&permuted, &ptarget, 1e-6).unwrap();
        assert!((a.min_budget - b.min_budget).abs() < 1e-12 * a.min_budget.max(1.0));
        for i in 0..3 {
            assert!((a.min_rates[perm[i]] - b.min_rates[i]).abs() < 1e-12);
        }
        let fa = fast_budget_bound(&params, &target);
        let fb = fast_budget_bound(&permuted, &ptarget);
        match (fa, fb) {
            (Ok(x), Ok(y)) => assert!((x - y).abs() < 1e-9 * x.max(1.0)),
            (Err(_), Err(_)) => {}
            _ => panic!("feasibility must be label-invariant"),
        }
    }

    #[test]
    fn extreme_rule_equilibrium_predictions() {
        let params = toy(); // capability 10 > threshold 2
        let target = PowerProfile::new(vec![1.0, 1.0]);
        let (rule, prediction) = extreme_rule(&params, &target).unwrap();
        assert_eq!(prediction.len(), 2);
        let wrapped = Rule::Extreme(rule);
        let eq = enumerate_equilibria(&params, Some(&wrapped), 21, 1e-9).unwrap();
        let reps = eq.representatives();
        assert_eq!(reps.len(), 2);
        for p in &prediction {
            assert!(eq.contains(p, 1e-9));
        }

        let starved = params.with_capability(1.0).unwrap(); // half the threshold
        let (rule, prediction) = extreme_rule(&starved, &target).unwrap();
        assert_eq!(prediction, vec![starved.full_power()]);
        let wrapped = Rule::Extreme(rule);
        let eq = enumerate_equilibria(&starved, Some(&wrapped), 21, 1e-9).unwrap();
        let reps = eq.representatives();
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0], starved.full_power());

        let (_, prediction) = extreme_rule(&params, &params.full_power()).unwrap();
        assert_eq!(prediction, vec![params.full_power()]);
    }

    #[test]
    fn witness_found_for_three_ordered_users() {
        // Hand-built 3-user network with strictly ordered per-user aggregate
        // thresholds; a healthy design margin leaves room for the hyperplane
        // perturbation to stay an equilibrium.
        let gains = vec![
            vec![0.0, 1.0, 1.3, 0.7],
            vec![1.0, 1.0, 0.10, 0.08],
            vec![0.9, 0.12, 1.1, 0.11],
            vec![1.1, 0.09, 0.13, 0.9],
        ];
        let params =
            NetworkParams::new(gains, vec![0.2, 0.25, 0.3], vec![5.0, 6.0, 7.0], 50.0).unwrap();
        let target = PowerProfile::new(vec![2.0, 2.5, 3.5]);
        let report = design_aggregate(&params, &target, 0.05).unwrap();
        let Rule::Aggregate(rule) = &report.rule else {
            panic!()
        };
        let alphas: Vec<f64> = (0..3)
            .map(|i| aggregate_rate_threshold(&params, &target, i))
            .collect();
        let budgets: Vec<f64> = (0..3)
            .map(|i| aggregate_budget_threshold(&params, &target, i))
            .collect();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!((alphas[i] - alphas[j]).abs() > 1e-9);
                assert!((budgets[i] - budgets[j]).abs() > 1e-9);
            }
        }
        let witness = aggregate_nonuniqueness_witness(&params, rule, &target, 1e-2)
            .unwrap()
            .expect("strictly ordered thresholds admit a nearby equilibrium");
        assert!(witness.sup_distance(&target) > 0.0);
        let residual = rule.aggregate(&witness) - rule.aggregate(&target);
        assert!(residual.abs() < 1e-9 * rule.target_aggregate.abs().max(1.0));
        assert!(is_nash(
            &params,
            Some(&Rule::Aggregate(rule.clone())),
            &witness,
            1e-9
        )
        .unwrap());
        // Local grid oracle around the hyperplane: the witness survives a
        // brute-force equilibrium check performed independently above via
        // is_nash over the continuum of unilateral deviations.
    }

    #[test]
    fn simulated_strong_budget_between_bounds_on_toy() {
        let params = toy();
        let target = PowerProfile::new(vec![1.0, 1.0]);
        let sim = simulated_strong_sustain_budget(&params, &target, 41, 1e-9, 1e-6).unwrap();
        let lo = sustain_budget(&params, &target).unwrap();
        let hi = strong_budget_upper_bound(&params, &target).unwrap();
        assert!(sim >= lo * (1.0 - 1e-6));
        assert!(sim <= hi * 1.01, "simulated {sim} above bound {hi}");
    }
}
