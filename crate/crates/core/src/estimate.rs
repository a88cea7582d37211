//! Blind estimation by the intervention device: tune per-user intervention
//! rates by doubling and bisection while watching the aggregate receive power
//! at N locations, then recover device-side gains, maximum powers, normalized
//! cross gains, normalized noise powers, and live individual transmit powers
//! from the collected readings. Users never cooperate; they are simulated as
//! myopic SINR maximizers reacting to each broadcast rule.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{best_response, IndividualRule, NetworkParams, PowerProfile, Rule};

/// A reading is "dropped" when it falls below the high reading by more than
/// this relative threshold.
const DROP_REL_TOL: f64 = 1e-9;

/// Condition-number ceiling above which linear recoveries are refused.
const MAX_CONDITION: f64 = 1e8;

const MAX_DOUBLINGS: usize = 200;
const MAX_RELAX_ITERS: usize = 100;

/// Finished users are pinned well above their bracket top. A rate barely above
/// the flip point is not enough: while a later user is probed below its own
/// threshold it sits at full power, and its live rate punishes everyone,
/// raising the pinned users' effective flip points. The pin must also stay far
/// below the budget clip, or a pinned user's own transient deviation would
/// saturate the punishment and stop deterring anyone else.
const PIN_FACTOR: f64 = 1e3;

/// Everything round `location` measured: per-user rate estimates and the
/// aggregate readings before and after each user's best response flipped.
#[derive(Debug, Clone)]
pub struct MeasurementRound {
    pub location: usize,
    /// Midpoints of the final bisection brackets, one per user.
    pub rate_estimates: Vec<f64>,
    /// Aggregate reading with the user still at full power.
    pub high_readings: Vec<f64>,
    /// Aggregate reading right after the user dropped to the temporary target.
    pub low_readings: Vec<f64>,
    /// Device-side noise at this location, known to the device.
    pub device_noise: f64,
    /// Real numbers broadcast during the round (indices count too).
    pub broadcast_count: usize,
}

/// The recovered picture of the network, plus accounting.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    /// `device_gains[l][i]`: gain from user i to the device receiver at location l.
    pub device_gains: Vec<Vec<f64>>,
    pub max_powers: Vec<f64>,
    /// `normalized_cross_gains[i][j]` approximates h_ij / h_i0 (diagonal unused).
    pub normalized_cross_gains: Vec<Vec<f64>>,
    /// `normalized_noise[i]` approximates n_i / h_i0.
    pub normalized_noise: Vec<f64>,
    pub tolerance: f64,
    pub total_broadcasts: usize,
}

fn locations(truth: &NetworkParams) -> Result<&crate::model::DeviceLocations> {
    truth.locations().ok_or_else(|| {
        Error::InvalidParams("estimation needs per-location device gains (with_locations)".into())
    })
}

/// Aggregate receive power seen by the device at `location`.
pub fn aggregate_reading(
    truth: &NetworkParams,
    location: usize,
    profile: &PowerProfile,
) -> Result<f64> {
    let locs = locations(truth)?;
    if location >= locs.gains.len() {
        return Err(Error::InvalidUser(location));
    }
    let sum: f64 = locs.gains[location]
        .iter()
        .zip(profile.as_slice())
        .map(|(g, p)| g * p)
        .sum();
    Ok(sum + locs.noise[location])
}

/// Users react to a broadcast one at a time, starting with the user whose
/// incentives just changed, and sweep until nobody moves. Simultaneous updates
/// are unusable here: the budget clip gives the response map spurious cycles
/// (two users can keep swapping who deviates), while under the sequential
/// order the perturbed user settles before anyone else reconsiders.
fn relax_users(
    truth: &NetworkParams,
    rule: &IndividualRule,
    profile: &mut PowerProfile,
    first: usize,
) -> Result<()> {
    let wrapped = Rule::Individual(rule.clone());
    let n = truth.n_users();
    for _ in 0..MAX_RELAX_ITERS {
        let mut moved = false;
        for k in 0..n {
            let i = (first + k) % n;
            let br = best_response(truth, Some(&wrapped), profile, i)?;
            if br != profile[i] {
                profile.set(i, br);
                moved = true;
            }
        }
        if !moved {
            return Ok(());
        }
    }
    Err(Error::Protocol(
        "users failed to settle after a broadcast".into(),
    ))
}

fn validate_temp_target(truth: &NetworkParams, temp_target: &PowerProfile) -> Result<()> {
    if temp_target.len() != truth.n_users() {
        return Err(Error::DimensionMismatch {
            expected: truth.n_users(),
            got: temp_target.len(),
        });
    }
    for i in 0..truth.n_users() {
        if !(temp_target[i] > 0.0 && temp_target[i] < truth.max_power(i)) {
            return Err(Error::InvalidProfile(format!(
                "temporary target of user {i} must lie strictly inside (0, P_{i})"
            )));
        }
    }
    Ok(())
}

/// One measurement round at `location`: users are visited in the order
/// location, location+1, ..., wrapping around; each user's flip rate is
/// bracketed by doubling and narrowed by bisection to width `eps`, after which
/// the user is pinned at the known-flipping upper rate so later measurements
/// see it at the temporary target.
pub fn run_measurement_round(
    truth: &NetworkParams,
    temp_target: &PowerProfile,
    location: usize,
    eps: f64,
) -> Result<MeasurementRound> {
    validate_temp_target(truth, temp_target)?;
    let locs = locations(truth)?;
    if location >= locs.gains.len() {
        return Err(Error::InvalidUser(location));
    }
    if !(eps > 0.0) {
        return Err(Error::Protocol("error tolerance must be positive".into()));
    }
    let n = truth.n_users();
    let mut alphas = vec![0.0; n];
    let mut broadcasts = n; // the initial all-zero rate vector
    let mut rule = IndividualRule::new(temp_target.clone(), alphas.clone(), truth.capability())?;
    let mut profile = truth.full_power();
    relax_users(truth, &rule, &mut profile, location)?;

    let mut rate_estimates = vec![0.0; n];
    let mut high_readings = vec![0.0; n];
    let mut low_readings = vec![0.0; n];

    for k in 0..n {
        let user = (location + k) % n;
        let high = aggregate_reading(truth, location, &profile)?;
        high_readings[user] = high;
        let mut lower = 0.0_f64;
        let mut upper = 0.0_f64;
        // First probe lands at twice this; a large start keeps the doubling
        // phase short ("any positive value, preferably large").
        let mut alpha = 2.0_f64;
        let mut low_reading = None;
        let mut doublings = 0;
        while upper == 0.0 || upper - lower > eps {
            let current = aggregate_reading(truth, location, &profile)?;
            let dropped = current < high - DROP_REL_TOL * high;
            if upper == 0.0 && !dropped {
                alpha *= 2.0;
                doublings += 1;
                if doublings > MAX_DOUBLINGS {
                    return Err(Error::Protocol(format!(
                        "user {user} never responded; capability may be too small"
                    )));
                }
            } else if !dropped {
                lower = alphas[user];
                alpha = 0.5 * (lower + upper);
            } else {
                upper = alphas[user];
                alpha = 0.5 * (lower + upper);
            }
            alphas[user] = alpha;
            rule = IndividualRule::new(temp_target.clone(), alphas.clone(), truth.capability())?;
            broadcasts += 2; // index and value
            relax_users(truth, &rule, &mut profile, user)?;
            let reading = aggregate_reading(truth, location, &profile)?;
            if reading < high - DROP_REL_TOL * high {
                low_reading = Some(reading);
            }
        }
        low_readings[user] = low_reading.ok_or_else(|| {
            Error::Protocol(format!("no dropped reading recorded for user {user}"))
        })?;
        rate_estimates[user] = 0.5 * (lower + upper);
        // Pin the user so the rest of the round sees it at the temporary
        // target even while later users are punished mid-bisection.
        alphas[user] = upper.max(1.0) * PIN_FACTOR;
        rule = IndividualRule::new(temp_target.clone(), alphas.clone(), truth.capability())?;
        broadcasts += 2;
        relax_users(truth, &rule, &mut profile, user)?;
    }
    Ok(MeasurementRound {
        location,
        rate_estimates,
        high_readings,
        low_readings,
        device_noise: locs.noise[location],
        broadcast_count: broadcasts,
    })
}

fn solve_checked(a: DMatrix<f64>, rhs: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "{what}: condition number {:.3e} beyond {MAX_CONDITION:.0e}",
            if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            }
        )));
    }
    let b = nalgebra::DVector::from_vec(rhs);
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::Singular(format!("{what}: {e}")))?;
    Ok(x.iter().cloned().collect())
}

/// Index of the user measured last in the round starting at `location`.
fn last_user(location: usize, n: usize) -> usize {
    (location + n - 1) % n
}

/// Recovers the device-side gains at every location and the users' maximum
/// power levels from N rounds of readings. The low reading of each round's
/// last user equals the all-at-target aggregate, which pins down the
/// location-1 gains through an N x N linear system; gap ratios then carry the
/// gains to the other locations, and the round-1 gaps yield the max powers.
pub fn recover_device_gains_and_max_powers(
    rounds: &[MeasurementRound],
    temp_target: &PowerProfile,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = temp_target.len();
    if rounds.len() != n {
        return Err(Error::Protocol(format!(
            "need {n} rounds, got {}",
            rounds.len()
        )));
    }
    for (l, r) in rounds.iter().enumerate() {
        if r.location != l {
            return Err(Error::Protocol("rounds must be ordered by location".into()));
        }
        if r.high_readings.len() != n || r.low_readings.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.high_readings.len(),
            });
        }
    }
    let gap = |l: usize, i: usize| rounds[l].high_readings[i] - rounds[l].low_readings[i];
    for l in 0..n {
        for i in 0..n {
            if gap(l, i) <= 0.0 {
                return Err(Error::Protocol(format!(
                    "round {l} recorded no drop for user {i}"
                )));
            }
        }
    }
    let mut a = DMatrix::zeros(n, n);
    let mut rhs = vec![0.0; n];
    for l in 0..n {
        for j in 0..n {
            a[(l, j)] = gap(l, j) / gap(0, j) * temp_target[j];
        }
        rhs[l] = rounds[l].low_readings[last_user(l, n)] - rounds[l].device_noise;
    }
    let base = solve_checked(a, rhs, "device-gain system")?;
    if base.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Singular(
            "recovered device gains must be positive".into(),
        ));
    }
    let mut device_gains = vec![vec![0.0; n]; n];
    for l in 0..n {
        for j in 0..n {
            device_gains[l][j] = base[j] * gap(l, j) / gap(0, j);
        }
    }
    let max_powers: Vec<f64> = (0..n)
        .map(|j| temp_target[j] + gap(0, j) / base[j])
        .collect();
    Ok((device_gains, max_powers))
}

/// Recovers the normalized cross gains h_ij / h_i0 and normalized noise
/// n_i / h_i0 from the per-round rate estimates. Between round l and round
/// l+1 only user l's simulated power changes (target in round l, full power
/// in round l+1), so the rate difference isolates h_{il}; the wrap-around
/// pair (last round, round 0) covers the last user the same way.
pub fn recover_normalized_params(
    rounds: &[MeasurementRound],
    temp_target: &PowerProfile,
    max_powers: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = temp_target.len();
    if rounds.len() != n || max_powers.len() != n {
        return Err(Error::Protocol(
            "need one round per user and a full max-power vector".into(),
        ));
    }
    let mut cross = vec![vec![0.0; n]; n];
    for l in 0..n {
        let next = (l + 1) % n;
        let span = max_powers[l] - temp_target[l];
        if span <= 0.0 {
            return Err(Error::Protocol(format!(
                "recovered max power of user {l} does not exceed its temporary target"
            )));
        }
        for i in 0..n {
            if i == l {
                continue;
            }
            let diff = rounds[next].rate_estimates[i] - rounds[l].rate_estimates[i];
            cross[i][l] = diff * temp_target[i] / span;
        }
    }
    // In round i the first-visited user is i itself, with every other user
    // still at full power; back-substitute that round's rate estimate.
    let mut noise = vec![0.0; n];
    for i in 0..n {
        let mut acc = rounds[i].rate_estimates[i] * temp_target[i];
        for j in 0..n {
            if j != i {
                acc -= cross[i][j] * max_powers[j];
            }
        }
        noise[i] = acc;
    }
    Ok((cross, noise))
}

/// Solves the per-location aggregate readings for the users' current transmit
/// powers, given the recovered device gains.
pub fn recover_individual_powers(
    device_gains: &[Vec<f64>],
    aggregate_readings: &[f64],
    device_noise: &[f64],
) -> Result<PowerProfile> {
    let n = device_gains.len();
    if aggregate_readings.len() != n || device_noise.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: aggregate_readings.len(),
        });
    }
    let mut a = DMatrix::zeros(n, n);
    for l in 0..n {
        if device_gains[l].len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: device_gains[l].len(),
            });
        }
        for j in 0..n {
            a[(l, j)] = device_gains[l][j];
        }
    }
    let rhs: Vec<f64> = (0..n)
        .map(|l| aggregate_readings[l] - device_noise[l])
        .collect();
    let scale = rhs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut powers = solve_checked(a, rhs, "individual-power system")?;
    for p in powers.iter_mut() {
        if *p < 0.0 {
            if *p > -1e-9 * scale {
                *p = 0.0;
            } else {
                return Err(Error::Protocol(format!(
                    "recovered power {p} is negative; readings are inconsistent"
                )));
            }
        }
    }
    Ok(PowerProfile::new(powers))
}

/// Runs the full protocol: N rounds, both recoveries, and the assembled report.
pub fn run_estimation(
    truth: &NetworkParams,
    temp_target: &PowerProfile,
    eps: f64,
) -> Result<(Vec<MeasurementRound>, EstimationReport)> {
    validate_temp_target(truth, temp_target)?;
    let locs = locations(truth)?;
    let n = truth.n_users();
    if locs.gains.len() < n {
        return Err(Error::InvalidParams(format!(
            "need at least {n} device locations, have {}",
            locs.gains.len()
        )));
    }
    let mut rounds = Vec::with_capacity(n);
    for l in 0..n {
        rounds.push(run_measurement_round(truth, temp_target, l, eps)?);
    }
    let (device_gains, max_powers) = recover_device_gains_and_max_powers(&rounds, temp_target)?;
    let (cross, noise) = recover_normalized_params(&rounds, temp_target, &max_powers)?;
    let total_broadcasts = rounds.iter().map(|r| r.broadcast_count).sum();
    if noise.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Protocol(
            "recovered noise powers must be positive".into(),
        ));
    }
    if max_powers.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Protocol(
            "recovered max powers must be positive".into(),
        ));
    }
    Ok((
        rounds,
        EstimationReport {
            device_gains,
            max_powers,
            normalized_cross_gains: cross,
            normalized_noise: noise,
            tolerance: eps,
            total_broadcasts,
        },
    ))
}

/// Builds a designer-usable parameter set from an estimation report by fixing
/// every device-to-user gain at one; all rule thresholds only ever use the
/// normalized quantities, so designs carry over to the true network unchanged.
pub fn params_from_report(report: &EstimationReport, capability: f64) -> Result<NetworkParams> {
    let n = report.max_powers.len();
    let mut gains = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        gains[i + 1][0] = 1.0;
        gains[0][i + 1] = report.device_gains[0][i];
        gains[i + 1][i + 1] = 1.0;
        for j in 0..n {
            if i != j {
                gains[i + 1][j + 1] = report.normalized_cross_gains[i][j].max(0.0);
            }
        }
    }
    NetworkParams::new(
        gains,
        report.normalized_noise.clone(),
        report.max_powers.clone(),
        capability,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design_sustain;
    use crate::model::{is_nash, DeviceLocations};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn with_circle_locations(params: NetworkParams, rng: &mut ChaCha8Rng) -> NetworkParams {
        let n = params.n_users();
        let gains = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(0.5..2.0)).collect())
            .collect();
        let noise = (0..n).map(|_| rng.random_range(0.01..0.05)).collect();
        params
            .with_locations(DeviceLocations { gains, noise })
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
                    gains[i + 1][j + 1] = rng.random_range(0.05..0.3);
                }
            }
        }
        let noise = (0..n).map(|_| rng.random_range(0.1..0.4)).collect();
        let max_powers = (0..n).map(|_| rng.random_range(2.0..6.0)).collect();
        let params = NetworkParams::new(gains, noise, max_powers, 1e4).unwrap();
        with_circle_locations(params, rng)
    }

    fn half_target(params: &NetworkParams) -> PowerProfile {
        PowerProfile::new(
            (0..params.n_users())
                .map(|i| 0.5 * params.max_power(i))
                .collect(),
        )
    }

    /// Ground-truth flip rate of `user` in round `location`: earlier-visited
    /// users sit at the temporary target, later ones at full power.
    fn true_flip_rate(
        params: &NetworkParams,
        temp: &PowerProfile,
        location: usize,
        user: usize,
    ) -> f64 {
        let n = params.n_users();
        let pos = |j: usize| (j + n - location) % n;
        let mut acc = params.noise(user);
        for j in 0..n {
            if j != user {
                let p = if pos(j) < pos(user) {
                    temp[j]
                } else {
                    params.max_power(j)
                };
                acc += params.cross_gain(user, j) * p;
            }
        }
        acc / (params.device_tx_gain(user) * temp[user])
    }

    #[test]
    fn single_user_round_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = random_network(&mut rng, 1);
        let temp = half_target(&params);
        let eps = 1e-6;
        let round = run_measurement_round(&params, &temp, 0, eps).unwrap();
        let expected = params.noise(0) / (params.device_tx_gain(0) * temp[0]);
        assert!(
            (round.rate_estimates[0] - expected).abs() <= eps,
            "estimate {} vs flip rate {expected}",
            round.rate_estimates[0]
        );
        let drop = round.high_readings[0] - round.low_readings[0];
        let want = params.locations().unwrap().gains[0][0] * (params.max_power(0) - temp[0]);
        assert!((drop - want).abs() < 1e-9 * want);
    }

    #[test]
    fn two_user_rates_within_tolerance_of_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = random_network(&mut rng, 2);
        let temp = half_target(&params);
        let eps = 1e-4;
        for location in 0..2 {
            let round = run_measurement_round(&params, &temp, location, eps).unwrap();
            for user in 0..2 {
                let truth = true_flip_rate(&params, &temp, location, user);
                assert!(
                    (round.rate_estimates[user] - truth).abs() <= eps,
                    "round {location} user {user}: {} vs {truth}",
                    round.rate_estimates[user]
                );
            }
        }
    }

    #[test]
    fn high_readings_exceed_low_readings() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = random_network(&mut rng, 3);
        let temp = half_target(&params);
        let round = run_measurement_round(&params, &temp, 1, 1e-4).unwrap();
        for i in 0..3 {
            assert!(round.high_readings[i] > round.low_readings[i]);
        }
    }

    #[test]
    fn broadcast_count_tracks_doubling_plus_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = random_network(&mut rng, 3);
        let temp = half_target(&params);
        let eps = 1e-4;
        let n = 3.0_f64;
        let round = run_measurement_round(&params, &temp, 0, eps).unwrap();
        let max_rate = (0..3)
            .map(|u| {
                (0..3)
                    .map(|l| true_flip_rate(&params, &temp, l, u))
                    .fold(0.0, f64::max)
            })
            .fold(0.0_f64, f64::max);
        // Bracket width never exceeds twice the largest flip rate (or the
        // initial probe), so each user costs at most the doublings to bracket,
        // the bisections to narrow, and the pin broadcast.
        let doubles = max_rate.max(4.0).log2().ceil() + 1.0;
        let bisects = (max_rate.max(4.0) / eps).log2().ceil() + 1.0;
        let bound = n + 2.0 * n * (doubles + bisects) + 2.0 * n;
        assert!(
            (round.broadcast_count as f64) <= bound,
            "count {} above derived bound {bound}",
            round.broadcast_count
        );
    }

    #[test]
    fn starved_capability_raises_protocol_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = random_network(&mut rng, 2);
        let starved = params.with_capability(1e-6).unwrap();
        let temp = half_target(&starved);
        assert!(matches!(
            run_measurement_round(&starved, &temp, 0, 1e-4),
            Err(Error::Protocol(_))
        ));
    }

    /// Builds exact synthetic rounds from the closed-form readings and rates.
    fn synthetic_rounds(params: &NetworkParams, temp: &PowerProfile) -> Vec<MeasurementRound> {
        let n = params.n_users();
        let locs = params.locations().unwrap();
        (0..n)
            .map(|location| {
                let pos = |j: usize| (j + n - location) % n;
                let mut high = vec![0.0; n];
                let mut low = vec![0.0; n];
                let mut rates = vec![0.0; n];
                for user in 0..n {
                    // When `user` is probed, everyone visited earlier sits at
                    // the target; the high reading keeps `user` at full power.
                    let mut h = locs.noise[location];
                    let mut l = locs.noise[location];
                    for j in 0..n {
                        let at_target = pos(j) < pos(user);
                        let p_h = if j == user {
                            params.max_power(j)
                        } else if at_target {
                            temp[j]
                        } else {
                            params.max_power(j)
                        };
                        let p_l = if j == user { temp[j] } else { p_h };
                        h += locs.gains[location][j] * p_h;
                        l += locs.gains[location][j] * p_l;
                    }
                    high[user] = h;
                    low[user] = l;
                    rates[user] = true_flip_rate(params, temp, location, user);
                }
                MeasurementRound {
                    location,
                    rate_estimates: rates,
                    high_readings: high,
                    low_readings: low,
                    device_noise: locs.noise[location],
                    broadcast_count: 0,
                }
            })
            .collect()
    }

    #[test]
    fn exact_rounds_recover_gains_and_max_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1usize, 2, 3, 5] {
            let params = random_network(&mut rng, n);
            let temp = half_target(&params);
            let rounds = synthetic_rounds(&params, &temp);
            let (gains, max_powers) = recover_device_gains_and_max_powers(&rounds, &temp).unwrap();
            let locs = params.locations().unwrap();
            for l in 0..n {
                for j in 0..n {
                    let rel = (gains[l][j] - locs.gains[l][j]).abs() / locs.gains[l][j];
                    assert!(rel < 1e-9, "gain ({l},{j}) off by {rel}");
                }
            }
            for j in 0..n {
                let rel = (max_powers[j] - params.max_power(j)).abs() / params.max_power(j);
                assert!(rel < 1e-9, "max power {j} off by {rel}");
            }
        }
    }

    #[test]
    fn scaled_readings_scale_gains_but_not_max_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = random_network(&mut rng, 3);
        let temp = half_target(&params);
        let mut rounds = synthetic_rounds(&params, &temp);
        let (_, base_powers) = recover_device_gains_and_max_powers(&rounds, &temp).unwrap();
        let c = 3.7;
        for r in rounds.iter_mut() {
            for v in r.high_readings.iter_mut() {
                *v *= c;
            }
            for v in r.low_readings.iter_mut() {
                *v *= c;
            }
            r.device_noise *= c;
        }
        let (gains, powers) = recover_device_gains_and_max_powers(&rounds, &temp).unwrap();
        let locs = params.locations().unwrap();
        for l in 0..3 {
            for j in 0..3 {
                let rel = (gains[l][j] - c * locs.gains[l][j]).abs() / (c * locs.gains[l][j]);
                assert!(rel < 1e-9);
            }
        }
        for j in 0..3 {
            assert!((powers[j] - base_powers[j]).abs() < 1e-9 * base_powers[j]);
        }
    }

    #[test]
    fn exact_rates_recover_normalized_params_including_wraparound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2usize, 3, 4] {
            let params = random_network(&mut rng, n);
            let temp = half_target(&params);
            let rounds = synthetic_rounds(&params, &temp);
            let maxes: Vec<f64> = (0..n).map(|i| params.max_power(i)).collect();
            let (cross, noise) = recover_normalized_params(&rounds, &temp, &maxes).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let want = params.cross_gain(i, j) / params.device_tx_gain(i);
                    let rel = (cross[i][j] - want).abs() / want;
                    // The wrap-around pair (last round, round 0) recovers
                    // column n-1; it must be as exact as the rest.
                    assert!(rel < 1e-9, "ratio ({i},{j}) off by {rel}");
                }
                let want = params.noise(i) / params.device_tx_gain(i);
                assert!((noise[i] - want).abs() < 1e-9 * want);
            }
        }
    }

    #[test]
    fn perturbed_rates_keep_ratio_error_within_interval_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = random_network(&mut rng, 3);
        let temp = half_target(&params);
        let eps = 1e-4;
        let mut rounds = synthetic_rounds(&params, &temp);
        for r in rounds.iter_mut() {
            for m in r.rate_estimates.iter_mut() {
                *m += rng.random_range(-eps..eps);
            }
        }
        let maxes: Vec<f64> = (0..3).map(|i| params.max_power(i)).collect();
        let (cross, _) = recover_normalized_params(&rounds, &temp, &maxes).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let want = params.cross_gain(i, j) / params.device_tx_gain(i);
                let bound = 2.0 * eps * temp[i] / (params.max_power(j) - temp[j]);
                assert!(
                    (cross[i][j] - want).abs() <= bound + 1e-12,
                    "ratio error above interval bound"
                );
            }
        }
    }

    #[test]
    fn symmetric_network_recovers_symmetric_ratios() {
        let gains = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.2],
            vec![1.0, 0.2, 1.0],
        ];
        let params = NetworkParams::new(gains, vec![0.3, 0.3], vec![4.0, 4.0], 1e4)
            .unwrap()
            .with_locations(DeviceLocations {
                gains: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
                noise: vec![0.02, 0.02],
            })
            .unwrap();
        let temp = PowerProfile::new(vec![2.0, 2.0]);
        let (_, report) = run_estimation(&params, &temp, 1e-5).unwrap();
        let a = report.normalized_cross_gains[0][1];
        let b = report.normalized_cross_gains[1][0];
        assert!((a - b).abs() < 1e-3 * a.max(b));
    }

    #[test]
    fn recover_individual_powers_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = random_network(&mut rng, 3);
        let locs = params.locations().unwrap();
        let profile = PowerProfile::new(
            (0..3)
                .map(|i| rng.random_range(0.0..params.max_power(i)))
                .collect(),
        );
        let readings: Vec<f64> = (0..3)
            .map(|l| aggregate_reading(&params, l, &profile).unwrap())
            .collect();
        let recovered = recover_individual_powers(&locs.gains, &readings, &locs.noise).unwrap();
        assert!(recovered.sup_distance(&profile) < 1e-9);
        // Residual check.
        for l in 0..3 {
            let mut acc = locs.noise[l];
            for j in 0..3 {
                acc += locs.gains[l][j] * recovered[j];
            }
            assert!((acc - readings[l]).abs() < 1e-9 * readings[l]);
        }
        // All silent: zero profile.
        let silent = PowerProfile::uniform(3, 0.0);
        let readings: Vec<f64> = (0..3)
            .map(|l| aggregate_reading(&params, l, &silent).unwrap())
            .collect();
        let recovered = recover_individual_powers(&locs.gains, &readings, &locs.noise).unwrap();
        assert_eq!(recovered, silent);
    }

    #[test]
    fn end_to_end_pipeline_supports_rule_design_on_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3] {
            let params = random_network(&mut rng, n);
            let temp = half_target(&params);
            let eps = 1e-4;
            let (_, report) = run_estimation(&params, &temp, eps).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let want = params.cross_gain(i, j) / params.device_tx_gain(i);
                    let rel = (report.normalized_cross_gains[i][j] - want).abs() / want;
                    assert!(rel <= 10.0 * eps, "cross ratio error {rel} above 10 eps");
                }
                let want = params.noise(i) / params.device_tx_gain(i);
                let rel = (report.normalized_noise[i] - want).abs() / want;
                assert!(rel <= 10.0 * eps, "noise ratio error {rel} above 10 eps");
                let rel = (report.max_powers[i] - params.max_power(i)).abs() / params.max_power(i);
                assert!(rel <= 1e-6, "max power error {rel} above 1e-6");
            }
            // Design on the recovered network, verify on the truth.
            let recovered = params_from_report(&report, params.capability()).unwrap();
            let target = PowerProfile::new((0..n).map(|i| 0.4 * report.max_powers[i]).collect());
            let designed = design_sustain(&recovered, &target, 100.0 * eps).unwrap();
            let Rule::Individual(rule) = designed.rule else {
                panic!()
            };
            // Clamp the target into the true box in case recovery overshot.
            let true_target =
                PowerProfile::new((0..n).map(|i| target[i].min(params.max_power(i))).collect());
            let carried =
                IndividualRule::new(true_target.clone(), rule.rates, params.capability()).unwrap();
            assert!(is_nash(
                &params,
                Some(&Rule::Individual(carried)),
                &true_target,
                1e-9
            )
            .unwrap());
        }
    }
}
