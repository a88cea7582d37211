//! Python bindings: the main types and operations of the intervention power
//! control library, exposed as the `intervene_py` extension module. Profiles
//! cross the boundary as plain lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use intervene_core::error::Error as CoreError;
use intervene_core::model::DeviceLocations;
use intervene_core::{adjust, design, estimate, model, scenario, welfare as welfare_mod};

fn err(e: CoreError) -> PyErr {
    match &e {
        CoreError::Infeasible(_) | CoreError::Protocol(_) | CoreError::Singular(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn profile(values: Vec<f64>) -> model::PowerProfile {
    model::PowerProfile::new(values)
}

#[pyclass(name = "NetworkParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNetworkParams {
    inner: model::NetworkParams,
}

#[pymethods]
impl PyNetworkParams {
    /// gains is the (N+1)x(N+1) matrix with the intervention device at row
    /// and column 0.
    #[new]
    fn new(
        gains: Vec<Vec<f64>>,
        noise: Vec<f64>,
        max_powers: Vec<f64>,
        capability: f64,
    ) -> PyResult<Self> {
        model::NetworkParams::new(gains, noise, max_powers, capability)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn with_locations(&self, gains: Vec<Vec<f64>>, noise: Vec<f64>) -> PyResult<Self> {
        self.inner
            .clone()
            .with_locations(DeviceLocations { gains, noise })
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn with_capability(&self, capability: f64) -> PyResult<Self> {
        self.inner
            .with_capability(capability)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    #[getter]
    fn max_powers(&self) -> Vec<f64> {
        self.inner.max_powers().to_vec()
    }

    #[getter]
    fn capability(&self) -> f64 {
        self.inner.capability()
    }

    fn full_power(&self) -> Vec<f64> {
        self.inner.full_power().to_vec()
    }

    fn cross_gain(&self, i: usize, j: usize) -> f64 {
        self.inner.cross_gain(i, j)
    }

    fn device_tx_gain(&self, i: usize) -> f64 {
        self.inner.device_tx_gain(i)
    }

    fn device_rx_gain(&self, i: usize) -> f64 {
        self.inner.device_rx_gain(i)
    }

    fn noise(&self, i: usize) -> f64 {
        self.inner.noise(i)
    }
}

#[pyclass(name = "Rule", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRule {
    inner: model::Rule,
}

#[pymethods]
impl PyRule {
    #[staticmethod]
    fn individual(target: Vec<f64>, rates: Vec<f64>, budget: f64) -> PyResult<Self> {
        model::IndividualRule::new(profile(target), rates, budget)
            .map(|r| Self {
                inner: model::Rule::Individual(r),
            })
            .map_err(err)
    }

    #[staticmethod]
    fn aggregate(
        rate: f64,
        target_aggregate: f64,
        weights: Vec<f64>,
        budget: f64,
    ) -> PyResult<Self> {
        model::AggregateRule::new(rate, target_aggregate, weights, budget)
            .map(|r| Self {
                inner: model::Rule::Aggregate(r),
            })
            .map_err(err)
    }

    #[staticmethod]
    fn generic(
        target: Vec<f64>,
        order: usize,
        coeffs: Vec<Vec<f64>>,
        budget: f64,
    ) -> PyResult<Self> {
        model::GenericRule::new(profile(target), order, coeffs, budget)
            .map(|r| Self {
                inner: model::Rule::Generic(r),
            })
            .map_err(err)
    }

    #[staticmethod]
    fn extreme(target: Vec<f64>, budget: f64) -> Self {
        Self {
            inner: model::Rule::Extreme(model::ExtremeRule {
                target: profile(target),
                budget,
            }),
        }
    }

    fn eval(&self, powers: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&profile(powers)).map_err(err)
    }

    #[getter]
    fn budget(&self) -> f64 {
        self.inner.budget()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner {
            model::Rule::Individual(_) => "individual",
            model::Rule::Aggregate(_) => "aggregate",
            model::Rule::Generic(_) => "generic",
            model::Rule::Extreme(_) => "extreme",
        }
    }

    /// Per-user rates for individual rules, the single rate for aggregate ones.
    #[getter]
    fn rates(&self) -> Vec<f64> {
        match &self.inner {
            model::Rule::Individual(r) => r.rates.clone(),
            model::Rule::Aggregate(r) => vec![r.rate],
            model::Rule::Generic(r) => r.coeffs.iter().flatten().cloned().collect(),
            model::Rule::Extreme(_) => Vec::new(),
        }
    }
}

#[pyclass(name = "DesignReport", frozen)]
struct PyDesignReport {
    #[pyo3(get)]
    min_rates: Vec<f64>,
    #[pyo3(get)]
    min_budget: f64,
    #[pyo3(get)]
    mode: String,
    #[pyo3(get)]
    margin: f64,
    #[pyo3(get)]
    active_users: Vec<usize>,
    rule: model::Rule,
}

#[pymethods]
impl PyDesignReport {
    #[getter]
    fn rule(&self) -> PyRule {
        PyRule {
            inner: self.rule.clone(),
        }
    }
}

fn wrap_report(report: design::DesignReport) -> PyDesignReport {
    PyDesignReport {
        min_rates: report.min_rates,
        min_budget: report.min_budget,
        mode: match report.mode {
            design::DesignMode::Sustain => "sustain".into(),
            design::DesignMode::StrongSustain => "strong_sustain".into(),
            design::DesignMode::FastConverge => "fast_converge".into(),
            design::DesignMode::AggregateSustain => "aggregate_sustain".into(),
        },
        margin: report.margin,
        active_users: report.active_users,
        rule: report.rule,
    }
}

#[pyclass(name = "TargetSequence", frozen)]
struct PyTargetSequence {
    #[pyo3(get)]
    targets: Vec<Vec<f64>>,
    #[pyo3(get)]
    step_budgets: Vec<f64>,
    #[pyo3(get)]
    budget_slack_steps: Vec<usize>,
}

fn wrap_sequence(seq: adjust::TargetSequence) -> PyTargetSequence {
    PyTargetSequence {
        targets: seq.targets.iter().map(|t| t.to_vec()).collect(),
        step_budgets: seq.step_budgets,
        budget_slack_steps: seq.budget_slack_steps,
    }
}

fn unwrap_sequence(seq: &PyTargetSequence) -> adjust::TargetSequence {
    adjust::TargetSequence {
        targets: seq
            .targets
            .iter()
            .cloned()
            .map(model::PowerProfile::new)
            .collect(),
        step_budgets: seq.step_budgets.clone(),
        budget_slack_steps: seq.budget_slack_steps.clone(),
    }
}

#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory {
    #[pyo3(get)]
    profiles: Vec<Vec<f64>>,
    #[pyo3(get)]
    targets: Vec<Vec<f64>>,
    #[pyo3(get)]
    intervention_powers: Vec<f64>,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    steps_to_converge: Option<usize>,
}

fn wrap_trajectory(traj: adjust::Trajectory) -> PyTrajectory {
    PyTrajectory {
        profiles: traj.steps.iter().map(|s| s.profile.to_vec()).collect(),
        targets: traj.steps.iter().map(|s| s.target.to_vec()).collect(),
        intervention_powers: traj.steps.iter().map(|s| s.intervention_power).collect(),
        converged: traj.converged,
        steps_to_converge: traj.steps_to_converge,
    }
}

#[pyclass(name = "EstimationReport", frozen)]
struct PyEstimationReport {
    #[pyo3(get)]
    device_gains: Vec<Vec<f64>>,
    #[pyo3(get)]
    max_powers: Vec<f64>,
    #[pyo3(get)]
    normalized_cross_gains: Vec<Vec<f64>>,
    #[pyo3(get)]
    normalized_noise: Vec<f64>,
    #[pyo3(get)]
    tolerance: f64,
    #[pyo3(get)]
    total_broadcasts: usize,
    #[pyo3(get)]
    per_round_broadcasts: Vec<usize>,
}

#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: scenario::ScenarioFile,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        scenario::load_scenario(std::path::Path::new(path))
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn params(&self) -> PyResult<PyNetworkParams> {
        self.inner
            .params()
            .map(|inner| PyNetworkParams { inner })
            .map_err(err)
    }

    #[getter]
    fn target(&self) -> Option<Vec<f64>> {
        self.inner.target().map(|t| t.to_vec())
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.name.clone()
    }
}

#[pyfunction]
fn builtin_fig1() -> PyScenario {
    PyScenario {
        inner: scenario::builtin_fig1(),
    }
}

#[pyfunction]
fn builtin_five_user() -> PyScenario {
    PyScenario {
        inner: scenario::builtin_five_user(),
    }
}

#[pyfunction]
fn builtin_estimation() -> PyScenario {
    PyScenario {
        inner: scenario::builtin_estimation(),
    }
}

#[pyfunction]
fn sinr(
    params: &PyNetworkParams,
    device_power: f64,
    powers: Vec<f64>,
    user: usize,
) -> PyResult<f64> {
    model::sinr(&params.inner, device_power, &profile(powers), user).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, rule, powers, user))]
fn best_response(
    params: &PyNetworkParams,
    rule: Option<&PyRule>,
    powers: Vec<f64>,
    user: usize,
) -> PyResult<f64> {
    model::best_response(
        &params.inner,
        rule.map(|r| &r.inner),
        &profile(powers),
        user,
    )
    .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, rule, powers, tol = 1e-9))]
fn is_nash(
    params: &PyNetworkParams,
    rule: Option<&PyRule>,
    powers: Vec<f64>,
    tol: f64,
) -> PyResult<bool> {
    model::is_nash(&params.inner, rule.map(|r| &r.inner), &profile(powers), tol).map_err(err)
}

/// Returns one representative profile per equilibrium cluster found on the grid.
#[pyfunction]
#[pyo3(signature = (params, rule, grid_points_per_axis, tol = 1e-9))]
fn enumerate_equilibria(
    params: &PyNetworkParams,
    rule: Option<&PyRule>,
    grid_points_per_axis: usize,
    tol: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let eq = model::enumerate_equilibria(
        &params.inner,
        rule.map(|r| &r.inner),
        grid_points_per_axis,
        tol,
    )
    .map_err(err)?;
    Ok(eq.representatives().iter().map(|p| p.to_vec()).collect())
}

#[pyfunction]
#[pyo3(signature = (params, target, margin = design::DEFAULT_MARGIN))]
fn design_sustain(
    params: &PyNetworkParams,
    target: Vec<f64>,
    margin: f64,
) -> PyResult<PyDesignReport> {
    design::design_sustain(&params.inner, &profile(target), margin)
        .map(wrap_report)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, margin = design::DEFAULT_MARGIN, ordering = None))]
fn design_strong_sustain(
    params: &PyNetworkParams,
    target: Vec<f64>,
    margin: f64,
    ordering: Option<Vec<usize>>,
) -> PyResult<PyDesignReport> {
    design::design_strong_sustain(&params.inner, &profile(target), margin, ordering.as_deref())
        .map(wrap_report)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, margin = design::DEFAULT_MARGIN))]
fn design_fast_converge(
    params: &PyNetworkParams,
    target: Vec<f64>,
    margin: f64,
) -> PyResult<PyDesignReport> {
    design::design_fast_converge(&params.inner, &profile(target), margin)
        .map(wrap_report)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, margin = design::DEFAULT_MARGIN))]
fn design_aggregate(
    params: &PyNetworkParams,
    target: Vec<f64>,
    margin: f64,
) -> PyResult<PyDesignReport> {
    design::design_aggregate(&params.inner, &profile(target), margin)
        .map(wrap_report)
        .map_err(err)
}

#[pyfunction]
fn sustain_budget(params: &PyNetworkParams, target: Vec<f64>) -> PyResult<f64> {
    design::sustain_budget(&params.inner, &profile(target)).map_err(err)
}

#[pyfunction]
fn strong_budget_upper_bound(params: &PyNetworkParams, target: Vec<f64>) -> PyResult<f64> {
    design::strong_budget_upper_bound(&params.inner, &profile(target)).map_err(err)
}

#[pyfunction]
fn fast_budget_bound(params: &PyNetworkParams, target: Vec<f64>) -> PyResult<f64> {
    design::fast_budget_bound(&params.inner, &profile(target)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, grid_points_per_axis = 101, tol = 1e-9, margin = design::DEFAULT_MARGIN))]
fn simulated_strong_sustain_budget(
    params: &PyNetworkParams,
    target: Vec<f64>,
    grid_points_per_axis: usize,
    tol: f64,
    margin: f64,
) -> PyResult<f64> {
    design::simulated_strong_sustain_budget(
        &params.inner,
        &profile(target),
        grid_points_per_axis,
        tol,
        margin,
    )
    .map_err(err)
}

/// Builds the extreme rule and its predicted equilibrium set.
#[pyfunction]
fn extreme_rule(params: &PyNetworkParams, target: Vec<f64>) -> PyResult<(PyRule, Vec<Vec<f64>>)> {
    let (rule, prediction) = design::extreme_rule(&params.inner, &profile(target)).map_err(err)?;
    Ok((
        PyRule {
            inner: model::Rule::Extreme(rule),
        },
        prediction.iter().map(|p| p.to_vec()).collect(),
    ))
}

#[pyfunction]
#[pyo3(signature = (params, rule, target, epsilon = 1e-2))]
fn aggregate_nonuniqueness_witness(
    params: &PyNetworkParams,
    rule: &PyRule,
    target: Vec<f64>,
    epsilon: f64,
) -> PyResult<Option<Vec<f64>>> {
    let model::Rule::Aggregate(agg) = &rule.inner else {
        return Err(PyValueError::new_err(
            "witness search needs an aggregate rule",
        ));
    };
    design::aggregate_nonuniqueness_witness(&params.inner, agg, &profile(target), epsilon)
        .map(|w| w.map(|p| p.to_vec()))
        .map_err(err)
}

#[pyfunction]
fn relative_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    adjust::relative_distance(&profile(p), &profile(q)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, initial, max_steps = 100))]
fn run_adjustment_none(
    params: &PyNetworkParams,
    initial: Vec<f64>,
    max_steps: usize,
) -> PyResult<PyTrajectory> {
    adjust::run_adjustment(
        &params.inner,
        &adjust::Schedule::NoIntervention,
        &profile(initial),
        max_steps,
    )
    .map(wrap_trajectory)
    .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, rule, initial, max_steps = 100))]
fn run_adjustment_fixed(
    params: &PyNetworkParams,
    rule: &PyRule,
    initial: Vec<f64>,
    max_steps: usize,
) -> PyResult<PyTrajectory> {
    let model::Rule::Individual(ind) = &rule.inner else {
        return Err(PyValueError::new_err(
            "fixed schedules use individual-power rules",
        ));
    };
    adjust::run_adjustment(
        &params.inner,
        &adjust::Schedule::Fixed(ind.clone()),
        &profile(initial),
        max_steps,
    )
    .map(wrap_trajectory)
    .map_err(err)
}

/// Runs the adjustment process along a target sequence, building each step's
/// tracking rule from the previous intermediate target.
#[pyfunction]
#[pyo3(signature = (params, sequence, initial, margin = design::DEFAULT_MARGIN, max_steps = 0))]
fn run_adjustment_sequence(
    params: &PyNetworkParams,
    sequence: &PyTargetSequence,
    initial: Vec<f64>,
    margin: f64,
    max_steps: usize,
) -> PyResult<PyTrajectory> {
    let seq = unwrap_sequence(sequence);
    let stages = adjust::rules_for_sequence(&params.inner, &seq, margin).map_err(err)?;
    let steps = if max_steps == 0 {
        seq.len() + 10
    } else {
        max_steps
    };
    adjust::run_adjustment(
        &params.inner,
        &adjust::Schedule::Staged(stages),
        &profile(initial),
        steps,
    )
    .map(wrap_trajectory)
    .map_err(err)
}

#[pyfunction]
fn fixed_rd_sequence(
    params: &PyNetworkParams,
    target: Vec<f64>,
    delta: f64,
) -> PyResult<PyTargetSequence> {
    adjust::fixed_rd_sequence(&params.inner, &profile(target), delta)
        .map(wrap_sequence)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, budget, eps1 = 1e-3, eps2 = 1e-3))]
fn mrd_sequence(
    params: &PyNetworkParams,
    target: Vec<f64>,
    budget: f64,
    eps1: f64,
    eps2: f64,
) -> PyResult<PyTargetSequence> {
    adjust::mrd_sequence(&params.inner, &profile(target), budget, eps1, eps2)
        .map(wrap_sequence)
        .map_err(err)
}

#[pyfunction]
fn geometric_sequence(
    target: Vec<f64>,
    max_powers: Vec<f64>,
    length: usize,
) -> PyResult<PyTargetSequence> {
    adjust::geometric_sequence(&profile(target), &max_powers, length)
        .map(wrap_sequence)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, target, budget, eps1 = 1e-3, eps2 = 1e-3, max_length = 500))]
fn min_geometric_length(
    params: &PyNetworkParams,
    target: Vec<f64>,
    budget: f64,
    eps1: f64,
    eps2: f64,
    max_length: usize,
) -> PyResult<usize> {
    adjust::min_geometric_length(
        &params.inner,
        &profile(target),
        budget,
        eps1,
        eps2,
        max_length,
    )
    .map_err(err)
}

#[pyfunction]
fn convergence_time_bound(
    params: &PyNetworkParams,
    target: Vec<f64>,
    budget: f64,
) -> PyResult<usize> {
    adjust::convergence_time_bound(&params.inner, &profile(target), budget).map_err(err)
}

#[pyfunction]
fn welfare(params: &PyNetworkParams, powers: Vec<f64>, kind: &str) -> PyResult<f64> {
    welfare_mod::welfare(&params.inner, &profile(powers), parse_kind(kind)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (params, kind, grid_points = 41, refine_iters = 2))]
fn solve_target(
    params: &PyNetworkParams,
    kind: &str,
    grid_points: usize,
    refine_iters: usize,
) -> PyResult<Vec<f64>> {
    welfare_mod::solve_target(&params.inner, parse_kind(kind)?, grid_points, refine_iters)
        .map(|p| p.to_vec())
        .map_err(err)
}

fn parse_kind(kind: &str) -> PyResult<welfare_mod::WelfareKind> {
    match kind {
        "sum_rate" => Ok(welfare_mod::WelfareKind::SumRate),
        "max_min" => Ok(welfare_mod::WelfareKind::MaxMin),
        other => Err(PyValueError::new_err(format!(
            "unknown welfare kind {other:?} (sum_rate | max_min)"
        ))),
    }
}

#[pyfunction]
#[pyo3(signature = (params, temp_target, eps = 1e-4))]
fn run_estimation(
    params: &PyNetworkParams,
    temp_target: Vec<f64>,
    eps: f64,
) -> PyResult<PyEstimationReport> {
    let (rounds, report) =
        estimate::run_estimation(&params.inner, &profile(temp_target), eps).map_err(err)?;
    Ok(PyEstimationReport {
        device_gains: report.device_gains,
        max_powers: report.max_powers,
        normalized_cross_gains: report.normalized_cross_gains,
        normalized_noise: report.normalized_noise,
        tolerance: report.tolerance,
        total_broadcasts: report.total_broadcasts,
        per_round_broadcasts: rounds.iter().map(|r| r.broadcast_count).collect(),
    })
}

#[pyfunction]
fn recover_individual_powers(
    device_gains: Vec<Vec<f64>>,
    aggregate_readings: Vec<f64>,
    device_noise: Vec<f64>,
) -> PyResult<Vec<f64>> {
    estimate::recover_individual_powers(&device_gains, &aggregate_readings, &device_noise)
        .map(|p| p.to_vec())
        .map_err(err)
}

/// Parameter set a designer can use, rebuilt from an estimation report with
/// unit device-to-user gains.
#[pyfunction]
fn params_from_report(report: &PyEstimationReport, capability: f64) -> PyResult<PyNetworkParams> {
    let core = estimate::EstimationReport {
        device_gains: report.device_gains.clone(),
        max_powers: report.max_powers.clone(),
        normalized_cross_gains: report.normalized_cross_gains.clone(),
        normalized_noise: report.normalized_noise.clone(),
        tolerance: report.tolerance,
        total_broadcasts: report.total_broadcasts,
    };
    estimate::params_from_report(&core, capability)
        .map(|inner| PyNetworkParams { inner })
        .map_err(err)
}

#[pymodule]
fn intervene_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetworkParams>()?;
    m.add_class::<PyRule>()?;
    m.add_class::<PyDesignReport>()?;
    m.add_class::<PyTargetSequence>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyEstimationReport>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(builtin_fig1, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_five_user, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_estimation, m)?)?;
    m.add_function(wrap_pyfunction!(sinr, m)?)?;
    m.add_function(wrap_pyfunction!(best_response, m)?)?;
    m.add_function(wrap_pyfunction!(is_nash, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_equilibria, m)?)?;
    m.add_function(wrap_pyfunction!(design_sustain, m)?)?;
    m.add_function(wrap_pyfunction!(design_strong_sustain, m)?)?;
    m.add_function(wrap_pyfunction!(design_fast_converge, m)?)?;
    m.add_function(wrap_pyfunction!(design_aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(sustain_budget, m)?)?;
    m.add_function(wrap_pyfunction!(strong_budget_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fast_budget_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simulated_strong_sustain_budget, m)?)?;
    m.add_function(wrap_pyfunction!(extreme_rule, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_nonuniqueness_witness, m)?)?;
    m.add_function(wrap_pyfunction!(relative_distance, m)?)?;
    m.add_function(wrap_pyfunction!(run_adjustment_none, m)?)?;
    m.add_function(wrap_pyfunction!(run_adjustment_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(run_adjustment_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_rd_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(mrd_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(min_geometric_length, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_time_bound, m)?)?;
    m.add_function(wrap_pyfunction!(welfare, m)?)?;
    m.add_function(wrap_pyfunction!(solve_target, m)?)?;
    m.add_function(wrap_pyfunction!(run_estimation, m)?)?;
    m.add_function(wrap_pyfunction!(recover_individual_powers, m)?)?;
    m.add_function(wrap_pyfunction!(params_from_report, m)?)?;
    Ok(())
}
