//! Welfare objectives over user SINRs (natural-log rates) and approximate
//! target-profile selection by grid seeding plus coordinate refinement.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{sinr, NetworkParams, PowerProfile};

/// Targets are kept strictly positive: no rule can deter a silent user.
pub const TARGET_FLOOR_FRACTION: f64 = 1e-6;

/// Fixed seed for the multi-start phase so solves are reproducible.
const MULTISTART_SEED: u64 = 0x9e3779b97f4a7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelfareKind {
    /// Sum of log(1 + SINR) over the users.
    SumRate,
    /// Minimum of log(1 + SINR) over the users.
    MaxMin,
}

/// Welfare of `profile` with the intervention device silent.
pub fn welfare(params: &NetworkParams, profile: &PowerProfile, kind: WelfareKind) -> Result<f64> {
    params.validate_profile(profile)?;
    let rates = (0..params.n_users())
        .map(|i| Ok((1.0 + sinr(params, 0.0, profile, i)?).ln()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(match kind {
        WelfareKind::SumRate => rates.iter().sum(),
        WelfareKind::MaxMin => rates.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

fn golden_refine_coordinate(
    params: &NetworkParams,
    kind: WelfareKind,
    profile: &mut PowerProfile,
    i: usize,
    lo: f64,
    hi: f64,
) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let eval = |p: f64, profile: &PowerProfile| {
        welfare(params, &profile.with(i, p), kind).expect("profile stays in the box")
    };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1, profile);
    let mut f2 = eval(x2, profile);
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2, profile);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1, profile);
        }
    }
    let (best_p, best_v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if best_v > eval(profile[i], profile) {
        profile.set(i, best_p);
    }
}

fn refine(
    params: &NetworkParams,
    kind: WelfareKind,
    start: PowerProfile,
    floors: &[f64],
    iters: usize,
) -> (PowerProfile, f64) {
    let mut profile = start;
    for _ in 0..iters {
        for i in 0..params.n_users() {
            golden_refine_coordinate(
                params,
                kind,
                &mut profile,
                i,
                floors[i],
                params.max_power(i),
            );
        }
    }
    let value = welfare(params, &profile, kind).expect("refined profile stays in the box");
    (profile, value)
}

/// Approximate welfare-maximizing target over the box `[floor, P]` with
/// `floor = 1e-6 P`. Up to three users the seed phase is an exhaustive grid;
/// beyond that it is a deterministic multi-start sample. Coordinate-wise
/// golden-section refinement then polishes the seeds; the full-power profile
/// is always among the candidates, so the result never scores below it.
pub fn solve_target(
    params: &NetworkParams,
    kind: WelfareKind,
    grid_points: usize,
    refine_iters: usize,
) -> Result<PowerProfile> {
    if grid_points < 2 {
        return Err(Error::Infeasible(
            "need at least two grid points per axis".into(),
        ));
    }
    let n = params.n_users();
    let floors: Vec<f64> = (0..n)
        .map(|i| TARGET_FLOOR_FRACTION * params.max_power(i))
        .collect();
    let mut seeds: Vec<PowerProfile> = vec![params.full_power()];
    if n <= 3 {
        let mut idx = vec![0usize; n];
        loop {
            let profile = PowerProfile::new(
                (0..n)
                    .map(|i| {
                        let f = idx[i] as f64 / (grid_points - 1) as f64;
                        floors[i] + f * (params.max_power(i) - floors[i])
                    })
                    .collect(),
            );
            seeds.push(profile);
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < grid_points {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == n {
                    return finish(params, kind, seeds, &floors, refine_iters);
                }
            }
        }
    }
    // Documented approximation for larger games: deterministic multi-start.
    let mut rng = ChaCha8Rng::seed_from_u64(MULTISTART_SEED);
    let samples = (grid_points * grid_points).max(64);
    for _ in 0..samples {
        seeds.push(PowerProfile::new(
            (0..n)
                .map(|i| rng.random_range(floors[i]..=params.max_power(i)))
                .collect(),
        ));
    }
    finish(params, kind, seeds, &floors, refine_iters)
}

fn finish(
    params: &NetworkParams,
    kind: WelfareKind,
    seeds: Vec<PowerProfile>,
    floors: &[f64],
    refine_iters: usize,
) -> Result<PowerProfile> {
    // Keep the handful of best seeds, refine those.
    let mut scored: Vec<(f64, PowerProfile)> = seeds
        .into_iter()
        .map(|p| {
            let v = welfare(params, &p, kind)?;
            Ok((v, p))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let keep = scored.len().min(8);
    let mut best: Option<(f64, PowerProfile)> = None;
    for (seed_value, seed) in scored.into_iter().take(keep) {
        let (refined, value) = refine(params, kind, seed.clone(), floors, refine_iters);
        let (value, profile) = if value >= seed_value {
            (value, refined)
        } else {
            (seed_value, seed)
        };
        if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
            best = Some((value, profile));
        }
    }
    Ok(best.expect("at least one seed").1)
}
