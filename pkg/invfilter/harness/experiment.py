"""
Monte Carlo experiment engine.

Each run simulates one trajectory, runs every forward filter on it, then
every inverse variant against the action stream of its designated forward
filter. Runs are independent work units; results are reduced in run_id order
so the worker count never changes the output.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from invfilter.analytics import summarize_records
from invfilter.config import config as runtime_config
from invfilter.core.statespace import (
    INITIAL_STREAM,
    NonlinearStateSpaceModel,
    defender_observations,
    draw_defender_noise,
    run_streams,
    simulate_trajectory,
)
from invfilter.errors import InvFilterError, StepFailure
from invfilter.filters.forward import FilterKind, ForwardRun, run_forward_filter
from invfilter.filters.inverse import InverseFilterState, SigmaStarAnchor, run_inverse_filter
from invfilter.harness.schemas import (
    ExperimentConfig,
    ExperimentResult,
    MonteCarloRecord,
    RunFailure,
    bound_curve_name,
    error_curve,
    forward_label,
)
from invfilter.logging_config import get_logger
from invfilter.rcrlb import bound_curve, forward_rcrlb_sequence, inverse_rcrlb_sequence
from invfilter.scenarios import ScenarioConfig, build_scenario
from invfilter.telemetry import flush_telemetry, in_worker, init_worker, record_run, trace_operation

logger = get_logger(__name__)

# Models hold callables, so every process builds its own from the config
_SCENARIO_CACHE: Dict[str, Tuple[NonlinearStateSpaceModel, ScenarioConfig]] = {}


@dataclass(frozen=True)
class ResolvedSettings:
    """Experiment values after scenario defaults have been filled in."""

    horizon: int
    runs: int
    kappa_forward: float
    kappa_inverse: float
    assumed_kappa: float
    position_indices: Optional[Tuple[int, ...]]
    workers: int


def scenario_for(config: ExperimentConfig) -> Tuple[NonlinearStateSpaceModel, ScenarioConfig]:
    key = config.scenario.model_dump_json()
    if key not in _SCENARIO_CACHE:
        _SCENARIO_CACHE[key] = build_scenario(config.scenario.name, config.scenario.parameters)
    return _SCENARIO_CACHE[key]


def resolve_settings(config: ExperimentConfig, scenario: ScenarioConfig) -> ResolvedSettings:
    if config.position_indices is not None:
        indices: Optional[Tuple[int, ...]] = tuple(config.position_indices)
    else:
        indices = scenario.position_indices
    return ResolvedSettings(
        horizon=config.horizon if config.horizon is not None else scenario.horizon,
        runs=config.runs if config.runs is not None else scenario.runs,
        kappa_forward=config.kappa.forward if config.kappa.forward is not None else scenario.kappa,
        kappa_inverse=config.kappa.inverse if config.kappa.inverse is not None else scenario.kappa_inv,
        assumed_kappa=scenario.assumed_kappa,
        position_indices=indices,
        workers=config.workers if config.workers is not None else runtime_config.WORKERS,
    )


def run_seed(seed: int, run_id: int) -> np.random.SeedSequence:
    """Seed of one run; independent of how runs are scheduled."""
    return np.random.SeedSequence(seed, spawn_key=(run_id,))


def squared_error(difference: np.ndarray, indices: Optional[Sequence[int]]) -> np.ndarray:
    """Row-wise ‖·‖² over the selected coordinates."""
    difference = np.atleast_2d(difference)
    if indices is not None:
        difference = difference[:, list(indices)]
    return np.sum(difference**2, axis=1)


def _failure(run_id: int, curve: str, error: InvFilterError) -> RunFailure:
    step = error.step if isinstance(error, StepFailure) else 0
    return RunFailure(run_id=run_id, step=step, curve=curve, message=str(error))


def simulate_run(config: ExperimentConfig, run_id: int) -> MonteCarloRecord:
    """
    Execute one Monte Carlo run of the filter matrix.

    All filters of the run consume the same trajectory and the same defender
    noise ε_1..ε_K. A failure anywhere marks the run as failed.
    """
    model, scenario = scenario_for(config)
    settings = resolve_settings(config, scenario)
    seed = run_seed(config.seed, run_id)
    record = MonteCarloRecord(run_id=run_id)
    indices = settings.position_indices
    anchor = SigmaStarAnchor(config.sigma_star_anchor)

    curve = "trajectory"
    try:
        initial = scenario.draw_initial(run_streams(seed)[INITIAL_STREAM])
        trajectory = simulate_trajectory(model, initial.x0, settings.horizon, seed)
        defender_noise = draw_defender_noise(model, settings.horizon, seed)

        forward_runs: Dict[FilterKind, ForwardRun] = {}
        for kind in config.filters.forward:
            label = forward_label(kind)
            curve = error_curve(label)
            run = run_forward_filter(model, kind, initial.x0hat, scenario.Sigma0, settings.kappa_forward, trajectory)
            forward_runs[FilterKind(kind)] = run
            record.curves[curve] = squared_error(trajectory.states - run.estimates(), indices)
            if config.rcrlb:
                curve = bound_curve_name(label)
                information = forward_rcrlb_sequence(
                    model, run.estimates(), scenario.Sigma0, config.regularization.delta_scale
                )
                record.curves[curve] = bound_curve(information, indices)
                record.deltas[curve] = information[-1].delta

        for variant in config.filters.inverse:
            forward_run = forward_runs[FilterKind(variant.true_forward)]
            estimates = forward_run.estimates()
            actions = defender_observations(model, estimates[1:], defender_noise)
            assumed_kappa = variant.assumed_kappa if variant.assumed_kappa is not None else settings.assumed_kappa
            init = InverseFilterState(
                xhathat=initial.xhathat0,
                Sigma_bar=scenario.Sigma_bar0,
                Sigma_star=scenario.Sigma_star0,
            )
            curve = error_curve(variant.name)
            inverse_run = run_inverse_filter(
                model,
                variant.kind,
                variant.assumed_forward,
                assumed_kappa,
                init,
                trajectory,
                estimates,
                actions,
                kappa_inv=settings.kappa_inverse,
                anchor=anchor,
            )
            record.curves[curve] = squared_error(inverse_run.errors, indices)
            if config.rcrlb and variant.matched:
                curve = bound_curve_name(variant.name)
                information = inverse_rcrlb_sequence(
                    model, inverse_run, trajectory, assumed_kappa, config.regularization.inverse_delta_scale
                )
                record.curves[curve] = bound_curve(information, indices)
                record.deltas[curve] = max(state.delta for state in information)
    except InvFilterError as e:
        record.failure = _failure(run_id, curve, e)
        record.curves = {}
        logger.warning("Monte Carlo run failed", run_id=run_id, curve=curve, error_message=str(e))
    return record


def _timed_run(args: Tuple[ExperimentConfig, int]) -> MonteCarloRecord:
    config, run_id = args
    start = time.perf_counter()
    with trace_operation("montecarlo.run", {"run_id": run_id, "scenario": config.scenario.name}):
        record = simulate_run(config, run_id)
    record_run(time.perf_counter() - start, config.scenario.name, failed=record.failed)
    if in_worker():
        flush_telemetry()
    return record


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> ExperimentResult:
    """
    Run the whole experiment and aggregate it.

    Args:
        config: Validated experiment config
        workers: Process count override; 1 runs everything in this process

    Returns:
        ExperimentResult with per-run records (ordered by run_id) and the summary
    """
    model, scenario = scenario_for(config)
    settings = resolve_settings(config, scenario)
    n_workers = max(1, workers if workers is not None else settings.workers)
    n_workers = min(n_workers, settings.runs)

    logger.info(
        "Starting experiment",
        scenario=scenario.name,
        runs=settings.runs,
        horizon=settings.horizon,
        seed=config.seed,
        workers=n_workers,
        forward=[FilterKind(kind).value for kind in config.filters.forward],
        inverse=[variant.name for variant in config.filters.inverse],
    )
    started = time.perf_counter()
    tasks = [(config, run_id) for run_id in range(settings.runs)]

    with trace_operation("run_experiment", {"scenario": scenario.name, "runs": settings.runs}):
        if n_workers == 1:
            records: List[MonteCarloRecord] = [_timed_run(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=n_workers, initializer=init_worker) as executor:
                records = list(executor.map(_timed_run, tasks, chunksize=max(1, len(tasks) // (4 * n_workers))))
    flush_telemetry()

    records.sort(key=lambda record: record.run_id)
    summary = summarize_records(records)
    logger.info(
        "Experiment finished",
        scenario=scenario.name,
        runs=settings.runs,
        excluded=summary.runs_excluded,
        seconds=round(time.perf_counter() - started, 3),
    )
    return ExperimentResult(records=records, summary=summary, horizon=settings.horizon, seed=config.seed)
