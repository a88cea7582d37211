//! Game primitives: network parameters, power profiles, intervention rules,
//! SINR evaluation, best responses, and equilibrium checks.
//!
//! Conventions: users are indexed `0..n_users`; the intervention device is a
//! separate entity whose transmit gain toward user `i`'s receiver is
//! `device_tx_gain(i)` and whose receive gain from user `i`'s transmitter is
//! `device_rx_gain(i)`. All values are linear power units, not dB.

use crate::error::{Error, Result};

/// Relative SINR improvement below which two best-response candidates are a tie.
/// Ties are broken toward the smaller power.
const TIE_REL_TOL: f64 = 1e-12;

/// Ground truth of a scenario: channel gains, noise powers, power limits and
/// the intervention device's capability.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    n_users: usize,
    /// (N+1)x(N+1) row-major gain matrix; index 0 is the intervention device.
    gains: Vec<f64>,
    noise: Vec<f64>,
    max_powers: Vec<f64>,
    capability: f64,
    locations: Option<DeviceLocations>,
}

/// Per-location receive gains and noise for the multi-location estimation
/// scenario (the device moves its receiver, or has one receiver per location).
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLocations {
    /// `gains[l][i]` is the gain from user `i`'s transmitter to the device
    /// receiver at location `l`.
    pub gains: Vec<Vec<f64>>,
    /// Device-side noise power at each location, known to the device.
    pub noise: Vec<f64>,
}

impl NetworkParams {
    /// Builds parameters from a full (N+1)x(N+1) gain matrix (device at index 0).
    pub fn new(
        gains: Vec<Vec<f64>>,
        noise: Vec<f64>,
        max_powers: Vec<f64>,
        capability: f64,
    ) -> Result<Self> {
        let n = noise.len();
        if n == 0 {
            return Err(Error::InvalidParams("need at least one user".into()));
        }
        if max_powers.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: max_powers.len(),
            });
        }
        if gains.len() != n + 1 || gains.iter().any(|row| row.len() != n + 1) {
            return Err(Error::InvalidParams(format!(
                "gain matrix must be {0}x{0} (device at index 0)",
                n + 1
            )));
        }
        let flat: Vec<f64> = gains.into_iter().flatten().collect();
        if flat.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidParams(
                "gains must be finite and nonnegative".into(),
            ));
        }
        if noise.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidParams(
                "noise powers must be finite and positive".into(),
            ));
        }
        if max_powers.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidParams(
                "max powers must be finite and positive".into(),
            ));
        }
        if !capability.is_finite() || capability <= 0.0 {
            return Err(Error::InvalidParams(
                "capability must be finite and positive".into(),
            ));
        }
        let params = NetworkParams {
            n_users: n,
            gains: flat,
            noise,
            max_powers,
            capability,
            locations: None,
        };
        for i in 0..n {
            if params.direct_gain(i) <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "direct gain of user {i} must be positive"
                )));
            }
            if params.device_tx_gain(i) <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "device-to-user gain of user {i} must be positive"
                )));
            }
        }
        Ok(params)
    }

    /// Attaches per-location device receive gains and noise for estimation runs.
    pub fn with_locations(mut self, locations: DeviceLocations) -> Result<Self> {
        if locations.gains.len() != locations.noise.len() {
            return Err(Error::InvalidParams(
                "one noise power per device location".into(),
            ));
        }
        if locations.gains.iter().any(|row| row.len() != self.n_users) {
            return Err(Error::InvalidParams(
                "location gains must cover every user".into(),
            ));
        }
        if locations
            .gains
            .iter()
            .flatten()
            .any(|g| !g.is_finite() || *g <= 0.0)
        {
            return Err(Error::InvalidParams(
                "location gains must be finite and positive".into(),
            ));
        }
        if locations.noise.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams(
                "location noise must be finite and nonnegative".into(),
            ));
        }
        self.locations = Some(locations);
        Ok(self)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Raw gain matrix entry; indices run over `0..=n_users` with 0 = device.
    pub fn gain(&self, to: usize, from: usize) -> f64 {
        self.gains[to * (self.n_users + 1) + from]
    }

    /// h_ii: user i's own link.
    pub fn direct_gain(&self, i: usize) -> f64 {
        self.gain(i + 1, i + 1)
    }

    /// h_ij: interference gain from user j's transmitter to user i's receiver.
    pub fn cross_gain(&self, i: usize, j: usize) -> f64 {
        self.gain(i + 1, j + 1)
    }

    /// h_i0: gain from the device transmitter to user i's receiver.
    pub fn device_tx_gain(&self, i: usize) -> f64 {
        self.gain(i + 1, 0)
    }

    /// h_0i: gain from user i's transmitter to the device receiver.
    pub fn device_rx_gain(&self, i: usize) -> f64 {
        self.gain(0, i + 1)
    }

    pub fn noise(&self, i: usize) -> f64 {
        self.noise[i]
    }

    pub fn max_power(&self, i: usize) -> f64 {
        self.max_powers[i]
    }

    pub fn max_powers(&self) -> &[f64] {
        &self.max_powers
    }

    /// The profile where every user transmits at its maximum power.
    pub fn full_power(&self) -> PowerProfile {
        PowerProfile::new(self.max_powers.clone())
    }

    pub fn capability(&self) -> f64 {
        self.capability
    }

    /// Returns a copy with a different intervention capability.
    pub fn with_capability(&self, capability: f64) -> Result<Self> {
        if !capability.is_finite() || capability <= 0.0 {
            return Err(Error::InvalidParams(
                "capability must be finite and positive".into(),
            ));
        }
        let mut p = self.clone();
        p.capability = capability;
        Ok(p)
    }

    pub fn locations(&self) -> Option<&DeviceLocations> {
        self.locations.as_ref()
    }

    /// All device receive weights h_0i, as used by aggregate monitoring.
    pub fn device_rx_gains(&self) -> Vec<f64> {
        (0..self.n_users).map(|i| self.device_rx_gain(i)).collect()
    }

    /// Total interference plus noise at user i's receiver, excluding the device.
    pub fn interference(&self, profile: &PowerProfile, i: usize) -> f64 {
        let mut acc = self.noise[i];
        for j in 0..self.n_users {
            if j != i {
                acc += self.cross_gain(i, j) * profile[j];
            }
        }
        acc
    }

    pub fn check_user(&self, user: usize) -> Result<()> {
        if user < self.n_users {
            Ok(())
        } else {
            Err(Error::InvalidUser(user))
        }
    }

    /// Validates `0 <= p_i <= P_i` for every user.
    pub fn validate_profile(&self, profile: &PowerProfile) -> Result<()> {
        if profile.len() != self.n_users {
            return Err(Error::DimensionMismatch {
                expected: self.n_users,
                got: profile.len(),
            });
        }
        for i in 0..self.n_users {
            let p = profile[i];
            if !p.is_finite() || p < 0.0 || p > self.max_powers[i] {
                return Err(Error::InvalidProfile(format!(
                    "p_{i} = {p} outside [0, {}]",
                    self.max_powers[i]
                )));
            }
        }
        Ok(())
    }
}

/// One transmit-power vector for the N users.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile(Vec<f64>);

impl PowerProfile {
    pub fn new(powers: Vec<f64>) -> Self {
        PowerProfile(powers)
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        PowerProfile(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.0[i] = value;
    }

    /// Copy with coordinate `i` replaced.
    pub fn with(&self, i: usize, value: f64) -> Self {
        let mut v = self.0.clone();
        v[i] = value;
        PowerProfile(v)
    }

    /// Largest coordinate-wise absolute difference.
    pub fn sup_distance(&self, other: &PowerProfile) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for PowerProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Clip to `[lo, hi]`, matching the bracket operator used by the rule classes.
pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// First-order rule on individual transmit powers: device power grows
/// linearly in each user's deviation from the target, clipped to the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualRule {
    pub target: PowerProfile,
    pub rates: Vec<f64>,
    pub budget: f64,
}

impl IndividualRule {
    pub fn new(target: PowerProfile, rates: Vec<f64>, budget: f64) -> Result<Self> {
        if target.len() != rates.len() {
            return Err(Error::DimensionMismatch {
                expected: target.len(),
                got: rates.len(),
            });
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParams(
                "rates must be finite and nonnegative".into(),
            ));
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::InvalidParams(
                "budget must be finite and positive".into(),
            ));
        }
        Ok(IndividualRule {
            target,
            rates,
            budget,
        })
    }

    pub fn eval(&self, profile: &PowerProfile) -> Result<f64> {
        if profile.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target.len(),
                got: profile.len(),
            });
        }
        let raw: f64 = (0..profile.len())
            .map(|i| self.rates[i] * (profile[i] - self.target[i]).abs())
            .sum();
        Ok(clip(raw, 0.0, self.budget))
    }
}

/// First-order rule on the aggregate receive power `sum_i h_0i p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRule {
    pub rate: f64,
    pub target_aggregate: f64,
    pub weights: Vec<f64>,
    pub budget: f64,
}

impl AggregateRule {
    pub fn new(rate: f64, target_aggregate: f64, weights: Vec<f64>, budget: f64) -> Result<Self> {
        if rate < 0.0 || !rate.is_finite() {
            return Err(Error::InvalidParams(
                "aggregate rate must be finite and nonnegative".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParams(
                "weights must be finite and positive".into(),
            ));
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::InvalidParams(
                "budget must be finite and positive".into(),
            ));
        }
        Ok(AggregateRule {
            rate,
            target_aggregate,
            weights,
            budget,
        })
    }

    pub fn aggregate(&self, profile: &PowerProfile) -> f64 {
        self.weights
            .iter()
            .zip(profile.as_slice())
            .map(|(w, p)| w * p)
            .sum()
    }

    pub fn eval(&self, profile: &PowerProfile) -> Result<f64> {
        if profile.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: profile.len(),
            });
        }
        let raw = self.rate * (self.aggregate(profile) - self.target_aggregate).abs();
        Ok(clip(raw, 0.0, self.budget))
    }
}

/// K-th order rule: sum over users and degrees of `alpha_{i,k} |p_i - t_i|^k`.
/// With K = 1 this coincides with [`IndividualRule`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenericRule {
    pub target: PowerProfile,
    pub order: usize,
    /// `coeffs[i][k-1]` multiplies `|p_i - t_i|^k`.
    pub coeffs: Vec<Vec<f64>>,
    pub budget: f64,
}

impl GenericRule {
    pub fn new(
        target: PowerProfile,
        order: usize,
        coeffs: Vec<Vec<f64>>,
        budget: f64,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParams("order must be at least 1".into()));
        }
        if coeffs.len() != target.len() {
            return Err(Error::DimensionMismatch {
                expected: target.len(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| c.len() != order) {
            return Err(Error::InvalidParams(
                "each user needs one coefficient per degree".into(),
            ));
        }
        if coeffs.iter().flatten().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidParams(
                "coefficients must be finite and nonnegative".into(),
            ));
        }
        if !budget.is_finite() || budget <= 0.0 {
            return Err(Error::InvalidParams(
                "budget must be finite and positive".into(),
            ));
        }
        Ok(GenericRule {
            target,
            order,
            coeffs,
            budget,
        })
    }

    fn user_term(&self, i: usize, p: f64) -> f64 {
        let dev = (p - self.target[i]).abs();
        let mut pow = 1.0;
        let mut acc = 0.0;
        for k in 0..self.order {
            pow *= dev;
            acc += self.coeffs[i][k] * pow;
        }
        acc
    }

    pub fn eval(&self, profile: &PowerProfile) -> Result<f64> {
        if profile.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target.len(),
                got: profile.len(),
            });
        }
        let raw: f64 = (0..profile.len())
            .map(|i| self.user_term(i, profile[i]))
            .sum();
        Ok(clip(raw, 0.0, self.budget))
    }
}

/// The all-or-nothing rule: zero at the target, full budget anywhere else.
/// The limiting case of first-order rules as every rate grows without bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeRule {
    pub target: PowerProfile,
    pub budget: f64,
}

impl ExtremeRule {
    pub fn eval(&self, profile: &PowerProfile) -> Result<f64> {
        if profile.len() != self.target.len() {
            return Err(Error::DimensionMismatch {
                expected: self.target.len(),
                got: profile.len(),
            });
        }
        let scale = self
            .target
            .as_slice()
            .iter()
            .fold(1.0_f64, |a, b| a.max(b.abs()));
        if profile.sup_distance(&self.target) <= 1e-9 * scale {
            Ok(0.0)
        } else {
            Ok(self.budget)
        }
    }
}

/// An intervention rule under either monitoring mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    Individual(IndividualRule),
    Aggregate(AggregateRule),
    Generic(GenericRule),
    Extreme(ExtremeRule),
}

impl Rule {
    pub fn eval(&self, profile: &PowerProfile) -> Result<f64> {
        match self {
            Rule::Individual(r) => r.eval(profile),
            Rule::Aggregate(r) => r.eval(profile),
            Rule::Generic(r) => r.eval(profile),
            Rule::Extreme(r) => r.eval(profile),
        }
    }

    pub fn budget(&self) -> f64 {
        match self {
            Rule::Individual(r) => r.budget,
            Rule::Aggregate(r) => r.budget,
            Rule::Generic(r) => r.budget,
            Rule::Extreme(r) => r.budget,
        }
    }
}

/// SINR of `user` when the device transmits `device_power` and the users
/// transmit `profile`.
pub fn sinr(
    params: &NetworkParams,
    device_power: f64,
    profile: &PowerProfile,
    user: usize,
) -> Result<f64> {
    params.check_user(user)?;
    params.validate_profile(profile)?;
    if !device_power.is_finite() || device_power < 0.0 {
        return Err(Error::InvalidProfile(format!(
            "device power {device_power} must be nonnegative"
        )));
    }
    Ok(sinr_unchecked(params, device_power, profile, user))
}

#[inline]
fn sinr_unchecked(
    params: &NetworkParams,
    device_power: f64,
    profile: &PowerProfile,
    user: usize,
) -> f64 {
    let denom = params.device_tx_gain(user) * device_power + params.interference(profile, user);
    params.direct_gain(user) * profile[user] / denom
}

/// SINR of `user` at own power `own`, with the rule applied to the resulting profile.
fn response_sinr(
    params: &NetworkParams,
    rule: Option<&Rule>,
    profile: &PowerProfile,
    user: usize,
    own: f64,
) -> f64 {
    let candidate = profile.with(user, own);
    let device = match rule {
        Some(r) => r.eval(&candidate).expect("dimensions already checked"),
        None => 0.0,
    };
    sinr_unchecked(params, device, &candidate, user)
}

/// The points inside `(0, P_i)` where the rule restricted to user `i` changes
/// analytic form: the kink at the user's target coordinate and the powers at
/// which the clipped value saturates at the budget.
fn rule_breakpoints(
    params: &NetworkParams,
    rule: &Rule,
    profile: &PowerProfile,
    user: usize,
) -> Vec<f64> {
    let cap = params.max_power(user);
    let mut pts = Vec::new();
    let mut push = |x: f64| {
        if x.is_finite() && x > 0.0 && x < cap {
            pts.push(x);
        }
    };
    match rule {
        Rule::Individual(r) => {
            let t = r.target[user];
            push(t);
            let rest: f64 = (0..profile.len())
                .filter(|j| *j != user)
                .map(|j| r.rates[j] * (profile[j] - r.target[j]).abs())
                .sum();
            if r.rates[user] > 0.0 && r.budget >= rest {
                let span = (r.budget - rest) / r.rates[user];
                push(t - span);
                push(t + span);
            }
        }
        Rule::Aggregate(r) => {
            let rest: f64 = (0..profile.len())
                .filter(|j| *j != user)
                .map(|j| r.weights[j] * profile[j])
                .sum();
            let zero = (r.target_aggregate - rest) / r.weights[user];
            push(zero);
            if r.rate > 0.0 {
                let span = r.budget / (r.rate * r.weights[user]);
                push(zero - span);
                push(zero + span);
            }
        }
        Rule::Extreme(r) => {
            push(r.target[user]);
        }
        Rule::Generic(r) => {
            let t = r.target[user];
            push(t);
            let rest: f64 = (0..profile.len())
                .filter(|j| *j != user)
                .map(|j| r.user_term(j, profile[j]))
                .sum();
            if r.budget >= rest {
                // g is monotone in |p - t| on each side; bisect for the budget crossing.
                let need = r.budget - rest;
                let own_term = |p: f64| r.user_term(user, p);
                for (lo, hi, rising) in [(t, cap, true), (0.0, t, false)] {
                    if lo >= hi {
                        continue;
                    }
                    let (a, b) = if rising { (lo, hi) } else { (hi, lo) };
                    // a is at the kink (term 0), b at the far end.
                    if own_term(b) <= need {
                        continue;
                    }
                    let (mut lo_x, mut hi_x) = (a, b);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo_x + hi_x);
                        if own_term(mid) <= need {
                            lo_x = mid;
                        } else {
                            hi_x = mid;
                        }
                        if (hi_x - lo_x).abs() < 1e-13 * cap.max(1.0) {
                            break;
                        }
                    }
                    push(0.5 * (lo_x + hi_x));
                }
            }
        }
    }
    pts
}

fn golden_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, iters: usize) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best response of `user` to the other users' powers in `profile`, under an
/// optional intervention rule. Returns the smallest maximizer of the user's
/// SINR over `[0, P_i]`.
///
/// Under first-order rules the SINR is monotone between consecutive rule
/// breakpoints, so evaluating the breakpoints and interval ends is exact.
/// Higher-order rules can hide an interior maximum inside a smooth piece; a
/// golden-section pass per piece covers those.
pub fn best_response(
    params: &NetworkParams,
    rule: Option<&Rule>,
    profile: &PowerProfile,
    user: usize,
) -> Result<f64> {
    params.check_user(user)?;
    params.validate_profile(profile)?;
    if let Some(r) = rule {
        // Surface dimension mismatches eagerly.
        r.eval(profile)?;
    }
    let cap = params.max_power(user);
    let mut candidates = vec![0.0, cap];
    if let Some(r) = rule {
        candidates.extend(rule_breakpoints(params, r, profile, user));
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * cap.max(1.0));

    let eval = |p: f64| response_sinr(params, rule, profile, user, p);
    let mut best_p = candidates[0];
    let mut best_v = eval(best_p);
    let consider = |p: f64, v: f64, best_p: &mut f64, best_v: &mut f64| {
        let tol = TIE_REL_TOL * best_v.abs().max(v.abs());
        if v > *best_v + tol || (v >= *best_v - tol && p < *best_p) {
            *best_p = p;
            *best_v = v;
        }
    };
    for &p in &candidates[1..] {
        consider(p, eval(p), &mut best_p, &mut best_v);
    }
    if matches!(rule, Some(Rule::Generic(r)) if r.order > 1) {
        for w in candidates.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a > 1e-12 * cap.max(1.0) {
                let (x, v) = golden_max(eval, a, b, 80);
                consider(x, v, &mut best_p, &mut best_v);
            }
        }
    }
    Ok(best_p)
}

/// Dense-grid reference for [`best_response`]; test oracle, not a fast path.
pub fn best_response_grid(
    params: &NetworkParams,
    rule: Option<&Rule>,
    profile: &PowerProfile,
    user: usize,
    points: usize,
) -> Result<f64> {
    params.check_user(user)?;
    params.validate_profile(profile)?;
    let cap = params.max_power(user);
    let mut best_p = 0.0;
    let mut best_v = response_sinr(params, rule, profile, user, 0.0);
    for k in 1..=points {
        let p = cap * k as f64 / points as f64;
        let v = response_sinr(params, rule, profile, user, p);
        if v > best_v * (1.0 + TIE_REL_TOL) {
            best_p = p;
            best_v = v;
        }
    }
    Ok(best_p)
}

/// Whether no user can improve its SINR by more than `tol` (relative) through
/// a unilateral deviation.
pub fn is_nash(
    params: &NetworkParams,
    rule: Option<&Rule>,
    profile: &PowerProfile,
    tol: f64,
) -> Result<bool> {
    params.validate_profile(profile)?;
    for i in 0..params.n_users() {
        let current = response_sinr(params, rule, profile, i, profile[i]);
        let br = best_response(params, rule, profile, i)?;
        let best = response_sinr(params, rule, profile, i, br);
        let improved = if current > 0.0 {
            best > current * (1.0 + tol)
        } else {
            best > tol
        };
        if improved {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All grid Nash equilibria of the induced game, grouped by proximity.
#[derive(Debug, Clone)]
pub struct EquilibriumSet {
    /// Every grid profile that passed the equilibrium check.
    pub points: Vec<PowerProfile>,
    /// Indices into `points`, one group per cluster of adjacent grid points.
    pub clusters: Vec<Vec<usize>>,
    /// Grid spacing per user, for interpreting cluster extents.
    pub steps: Vec<f64>,
}

impl EquilibriumSet {
    /// One profile per cluster: the member closest to the cluster centroid.
    pub fn representatives(&self) -> Vec<PowerProfile> {
        self.clusters
            .iter()
            .map(|cluster| {
                let n = self.points[cluster[0]].len();
                let mut centroid = vec![0.0; n];
                for &idx in cluster {
                    for (c, v) in centroid.iter_mut().zip(self.points[idx].as_slice()) {
                        *c += v;
                    }
                }
                for c in centroid.iter_mut() {
                    *c /= cluster.len() as f64;
                }
                let centroid = PowerProfile::new(centroid);
                let best = cluster
                    .iter()
                    .min_by(|a, b| {
                        let da = self.points[**a].sup_distance(&centroid);
                        let db = self.points[**b].sup_distance(&centroid);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                self.points[*best].clone()
            })
            .collect()
    }

    /// Whether some found equilibrium lies within `tol` (sup norm) of `profile`.
    pub fn contains(&self, profile: &PowerProfile, tol: f64) -> bool {
        self.points.iter().any(|p| p.sup_distance(profile) <= tol)
    }
}

/// Brute-force equilibrium search over a regular grid; the ground-truth oracle
/// used to verify (strong) sustainment claims.
pub fn enumerate_equilibria(
    params: &NetworkParams,
    rule: Option<&Rule>,
    grid_points_per_axis: usize,
    tol: f64,
) -> Result<EquilibriumSet> {
    if grid_points_per_axis < 2 {
        return Err(Error::Tractability(
            "need at least 2 grid points per axis".into(),
        ));
    }
    let n = params.n_users();
    let total = (grid_points_per_axis as f64).powi(n as i32);
    if total > 1e7 {
        return Err(Error::Tractability(format!(
            "{grid_points_per_axis}^{n} grid points exceed the 1e7 guard"
        )));
    }
    let steps: Vec<f64> = (0..n)
        .map(|i| params.max_power(i) / (grid_points_per_axis - 1) as f64)
        .collect();
    // The last index lands exactly on the box corner.
    let coord = |i: usize, k: usize| {
        if k + 1 == grid_points_per_axis {
            params.max_power(i)
        } else {
            steps[i] * k as f64
        }
    };
    let mut points = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let profile =
            PowerProfile::new(idx.iter().enumerate().map(|(i, k)| coord(i, *k)).collect());
        if is_nash(params, rule, &profile, tol)? {
            points.push(profile);
        }
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < grid_points_per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return Ok(cluster_points(points, steps));
            }
        }
    }
}

fn cluster_points(points: Vec<PowerProfile>, steps: Vec<f64>) -> EquilibriumSet {
    let n_pts = points.len();
    let mut assigned = vec![usize::MAX; n_pts];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..n_pts {
        if assigned[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut stack = vec![start];
        assigned[start] = id;
        let mut members = vec![start];
        while let Some(cur) = stack.pop() {
            for next in 0..n_pts {
                if assigned[next] != usize::MAX {
                    continue;
                }
                let adjacent = points[cur]
                    .as_slice()
                    .iter()
                    .zip(points[next].as_slice())
                    .zip(&steps)
                    .all(|((a, b), s)| (a - b).abs() <= 1.5 * s);
                if adjacent {
                    assigned[next] = id;
                    stack.push(next);
                    members.push(next);
                }
            }
        }
        clusters.push(members);
    }
    EquilibriumSet {
        points,
        clusters,
        steps,
    }
}

/// Checks that `target` is the only grid equilibrium under `rule`, stopping at
/// the first other equilibrium found. Target coordinates should lie on the grid.
pub fn strongly_sustains_on_grid(
    params: &NetworkParams,
    rule: &Rule,
    target: &PowerProfile,
    grid_points_per_axis: usize,
    tol: f64,
) -> Result<bool> {
    if !is_nash(params, Some(rule), target, tol)? {
        return Ok(false);
    }
    let n = params.n_users();
    let total = (grid_points_per_axis as f64).powi(n as i32);
    if total > 1e7 {
        return Err(Error::Tractability(format!(
            "{grid_points_per_axis}^{n} grid points exceed the 1e7 guard"
        )));
    }
    let steps: Vec<f64> = (0..n)
        .map(|i| params.max_power(i) / (grid_points_per_axis - 1) as f64)
        .collect();
    let coord = |i: usize, k: usize| {
        if k + 1 == grid_points_per_axis {
            params.max_power(i)
        } else {
            steps[i] * k as f64
        }
    };
    let mut idx = vec![0usize; n];
    loop {
        let profile =
            PowerProfile::new(idx.iter().enumerate().map(|(i, k)| coord(i, *k)).collect());
        let near_target = profile
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .zip(&steps)
            .all(|((a, b), s)| (a - b).abs() <= 0.5 * s);
        if !near_target && is_nash(params, Some(rule), &profile, tol)? {
            return Ok(false);
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < grid_points_per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return Ok(true);
            }
        }
    }
}
