"""End-to-end perturbation experiment: offline basis construction, a family
of perturbed behavior subspaces, rolling one-step prediction, and CSV output.

The perturbed family is nested: one tangent direction is drawn from
``seed_perturb`` and every member sits on that geodesic at its own target
distance.  This makes the average error a smooth, near-linear function of
the distance, as opposed to independent per-member directions whose
direction-dependent sensitivity scatters the trend.

Seeds are split into three independent streams (offline/online data input,
measurement noise, perturbation direction).  The online streams use the
corresponding seed plus ``ONLINE_SEED_OFFSET`` so they never collide with the
offline draws.  Every output is a pure function of the configuration, so
repeated runs are byte-identical and trials can be evaluated concurrently
without changing the files.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kv import read_pairs
from ._linalg import spectral_norm
from .bounds import one_step_bound
from .errors import HypothesisViolationError
from .grassmann import BehaviorBasis, chordal_distance, orthonormal_basis, perturb_subspace
from .hankel import persistently_exciting_input, stacked_data_matrix
from .lti import NoiseSpec, StateSpaceModel, Trajectory, load_model, simulate
from .predictor import context_windows, pseudoinverse

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "SummaryRecord",
    "SingleRecord",
    "ExperimentWorkspace",
    "default_model",
    "load_config",
    "prepare",
    "run_trial",
    "run_experiment",
    "run_single",
]

logger = logging.getLogger(__name__)

ONLINE_SEED_OFFSET = 101


def default_model() -> StateSpaceModel:
    """The bundled two-state single-input single-output example system."""
    return StateSpaceModel(
        A=[[0.8, 0.2], [0.1, 0.9]],
        B=[[0.3], [0.7]],
        C=[[1.0, 1.0]],
        D=[[0.0]],
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a perturbation sweep.  Defaults reproduce the bundled
    experiment: length-30 offline data, 50-step online run, 100 perturbations
    with distances evenly spaced up to 0.9, noise-to-signal ratio 0.02."""

    model: StateSpaceModel
    Tini: int = 4
    Tf: int = 4
    T: int = 30
    T_sim: int = 50
    N: int = 100
    sigma: float = 0.02
    kappa_max: float = 0.9
    kappa_grid: tuple[float, ...] | None = None
    seed_data: int = 0
    seed_noise: int = 1
    seed_perturb: int = 3
    output_dir: str = "out"

    def __post_init__(self):
        if min(self.Tini, self.Tf) < 1:
            raise ValueError(f"Tini and Tf must be positive, got ({self.Tini}, {self.Tf})")
        L = self.Tini + self.Tf
        if self.T < L:
            raise ValueError(f"offline length T={self.T} is shorter than Tini+Tf={L}")
        if self.T_sim < L:
            raise ValueError(f"online length T_sim={self.T_sim} is shorter than Tini+Tf={L}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        if self.kappa_grid is not None:
            grid = tuple(float(k) for k in self.kappa_grid)
            if not grid:
                raise ValueError("kappa_grid must not be empty")
            if any(k < 0 for k in grid):
                raise ValueError("kappa_grid values must be nonnegative")
            object.__setattr__(self, "kappa_grid", grid)
            object.__setattr__(self, "N", len(grid))
        else:
            if self.N < 1:
                raise ValueError(f"N must be at least 1, got {self.N}")
            if self.kappa_max <= 0:
                raise ValueError(f"kappa_max must be positive, got {self.kappa_max}")

    @property
    def kappas(self) -> tuple[float, ...]:
        """Target distances, one per trial: the explicit grid when given,
        otherwise N points evenly spaced on (0, kappa_max]."""
        if self.kappa_grid is not None:
            return self.kappa_grid
        return tuple(self.kappa_max * (i + 1) / self.N for i in range(self.N))


_CONFIG_INT_KEYS = ("Tini", "Tf", "T", "T_sim", "N", "seed_data", "seed_noise", "seed_perturb")
_CONFIG_FLOAT_KEYS = ("sigma", "kappa_max")


def load_config(path) -> ExperimentConfig:
    """Read a key-value configuration file.

    Recognized keys: model (path to a model file), Tini, Tf, T, T_sim, N,
    sigma, kappa_max, kappa_grid (comma-separated), seed_data, seed_noise,
    seed_perturb, output_dir.  Missing keys fall back to the defaults;
    relative paths are resolved against the config file's directory.
    """
    path = Path(path)
    pairs = read_pairs(path.read_text(encoding="utf-8"), source=str(path))
    kwargs: dict = {}
    for key, raw in pairs.items():
        if key in _CONFIG_INT_KEYS:
            kwargs[key] = int(raw)
        elif key in _CONFIG_FLOAT_KEYS:
            kwargs[key] = float(raw)
        elif key == "kappa_grid":
            kwargs[key] = tuple(float(tok) for tok in raw.split(","))
        elif key == "model":
            kwargs[key] = load_model(_resolve(path.parent, raw))
        elif key == "output_dir":
            kwargs[key] = str(_resolve(path.parent, raw))
        else:
            raise ValueError(f"{path}: unknown configuration key {key!r}")
    kwargs.setdefault("model", default_model())
    return ExperimentConfig(**kwargs)


def _resolve(base: Path, raw: str) -> Path:
    p = Path(raw)
    return p if p.is_absolute() else base / p


@dataclass(frozen=True)
class TrialRecord:
    """One (perturbation, time-step) observation."""

    n: int
    kappa: float
    t: int
    prediction_error: float
    bound: float | None
    sigma_min_Mhat: float


@dataclass(frozen=True)
class SummaryRecord:
    """Per-perturbation averages over the rolling window."""

    n: int
    kappa: float
    avg_error: float
    avg_bound: float | None


@dataclass(frozen=True)
class SingleRecord:
    """One time step of a single-perturbation trace."""

    t: int
    baseline: np.ndarray
    perturbed: np.ndarray
    error: float
    bound: float | None


@dataclass(frozen=True, eq=False)
class ExperimentWorkspace:
    """Everything shared by the trials of one configuration: the baseline
    basis from offline data, the measured online trajectory, the sliding
    contexts, and the baseline one-step predictions."""

    config: ExperimentConfig
    basis: BehaviorBasis
    offline: Trajectory
    measured: Trajectory
    steps: tuple[int, ...]
    context_matrix: np.ndarray  # (steps, len(b)) stacked context vectors
    b_norms: np.ndarray
    baseline: np.ndarray  # (steps, p) one-step predictions of the baseline


def _one_step_map(basis: BehaviorBasis) -> tuple[np.ndarray, float, float]:
    """Row map b -> first predicted output, plus the diagnostics feeding the
    computable bound: (map, sigma_min of context rows, norm of the first
    future-output block-row)."""
    M = basis.context_block
    sigma_min = float(np.linalg.svd(M, compute_uv=False)[-1])
    first_rows = basis.y_future[: basis.basis.p]
    return first_rows @ pseudoinverse(M), sigma_min, spectral_norm(first_rows)


def prepare(config: ExperimentConfig) -> ExperimentWorkspace:
    """Run the offline and online stages shared by every trial."""
    model = config.model
    L = config.Tini + config.Tf
    r = model.m * L + model.n

    u_offline = persistently_exciting_input(
        model.m, config.T, order=model.n + L, seed=config.seed_data
    )
    offline = simulate(
        model, u_offline, noise=_noise(config.sigma, config.seed_noise)
    )
    data = stacked_data_matrix(offline.inputs, offline.outputs, config.Tini, config.Tf)
    basis = orthonormal_basis(data, r)

    u_online = np.random.default_rng(config.seed_data + ONLINE_SEED_OFFSET).standard_normal(
        (config.T_sim, model.m)
    )
    measured = simulate(
        model, u_online, noise=_noise(config.sigma, config.seed_noise + ONLINE_SEED_OFFSET)
    )

    steps, contexts = zip(*context_windows(measured, config.Tini, config.Tf))
    context_matrix = np.array([ctx.b for ctx in contexts])
    b_norms = np.linalg.norm(context_matrix, axis=1)
    base_map, _, _ = _one_step_map(basis)
    baseline = context_matrix @ base_map.T
    return ExperimentWorkspace(
        config=config,
        basis=basis,
        offline=offline,
        measured=measured,
        steps=tuple(steps),
        context_matrix=context_matrix,
        b_norms=b_norms,
        baseline=baseline,
    )


def _noise(sigma: float, seed: int) -> NoiseSpec:
    if sigma == 0:
        return NoiseSpec.none()
    return NoiseSpec.relative_gaussian(sigma, seed)


@dataclass(frozen=True, eq=False)
class TrialOutput:
    records: tuple[TrialRecord, ...]
    summary: SummaryRecord
    basis: BehaviorBasis
    kappa: float
    sigma_min_Mhat: float


def run_trial(workspace: ExperimentWorkspace, n: int) -> TrialOutput:
    """Evaluate perturbation index n (1-based) of the configured family.

    Member n lies at target distance kappas[n-1] along the shared geodesic
    direction drawn from seed_perturb.
    """
    config = workspace.config
    if not 1 <= n <= config.N:
        raise ValueError(f"trial index n={n} out of range 1..{config.N}")
    target = config.kappas[n - 1]
    perturbed = perturb_subspace(workspace.basis, target, seed=config.seed_perturb)
    kappa = chordal_distance(workspace.basis, perturbed)
    pred_map, sigma_min, norm_first = _one_step_map(perturbed)
    predictions = workspace.context_matrix @ pred_map.T
    errors = np.linalg.norm(predictions - workspace.baseline, axis=1)

    try:
        unit_bound = one_step_bound(sigma_min, norm_first, kappa, 1.0)
    except HypothesisViolationError:
        unit_bound = None

    records = []
    bounds_at_t = []
    for i, t in enumerate(workspace.steps):
        bound = None if unit_bound is None else unit_bound * float(workspace.b_norms[i])
        if bound is not None and bound < errors[i]:
            logger.warning(
                "trial n=%d, t=%d: bound %.6g below observed error %.6g", n, t, bound, errors[i]
            )
        records.append(
            TrialRecord(
                n=n,
                kappa=kappa,
                t=t,
                prediction_error=float(errors[i]),
                bound=bound,
                sigma_min_Mhat=sigma_min,
            )
        )
        bounds_at_t.append(bound)
    avg_bound = None
    if unit_bound is not None:
        avg_bound = float(np.mean(bounds_at_t))
    summary = SummaryRecord(
        n=n, kappa=kappa, avg_error=float(np.mean(errors)), avg_bound=avg_bound
    )
    return TrialOutput(
        records=tuple(records),
        summary=summary,
        basis=perturbed,
        kappa=kappa,
        sigma_min_Mhat=sigma_min,
    )


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, write: bool = True
) -> tuple[list[TrialRecord], list[SummaryRecord]]:
    """Run every trial of the sweep and (optionally) write ``trials.csv`` and
    ``summary.csv`` to the configured output directory.

    Trials are independent given the shared workspace, so ``jobs > 1``
    evaluates them concurrently; results are assembled in trial order and the
    files do not depend on the schedule.
    """
    workspace = prepare(config)
    indices = range(1, config.N + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(lambda n: run_trial(workspace, n), indices))
    else:
        outputs = [run_trial(workspace, n) for n in indices]
    trials = [rec for out in outputs for rec in out.records]
    summaries = [out.summary for out in outputs]
    if write:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trials_csv(out_dir / "trials.csv", trials)
        write_summary_csv(out_dir / "summary.csv", summaries)
    return trials, summaries


def run_single(
    config: ExperimentConfig, n: int, write: bool = True
) -> tuple[list[SingleRecord], float]:
    """Trace one perturbation: per-step baseline and perturbed one-step
    predictions, their gap, and the computable bound where it is certified.

    Writes ``single_<n>.csv`` with columns t,baseline,perturbed,error,bound
    (output channels are expanded to baseline_i/perturbed_i when p > 1).
    Returns the records and the measured chordal distance.
    """
    workspace = prepare(config)
    out = run_trial(workspace, n)
    pred_map, _, _ = _one_step_map(out.basis)
    predictions = workspace.context_matrix @ pred_map.T
    records = [
        SingleRecord(
            t=t,
            baseline=workspace.baseline[i],
            perturbed=predictions[i],
            error=out.records[i].prediction_error,
            bound=out.records[i].bound,
        )
        for i, t in enumerate(workspace.steps)
    ]
    if write:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_single_csv(out_dir / f"single_{n}.csv", records, workspace.measured.p)
    return records, out.kappa


# ---------------------------------------------------------------------------
# CSV emission.  Floats are written with repr (shortest round-trip form);
# a missing bound becomes an empty field.
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def write_trials_csv(path, records: list[TrialRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "kappa", "t", "prediction_error", "bound", "sigma_min_Mhat"])
        for rec in records:
            writer.writerow(
                [
                    str(rec.n),
                    _fmt(rec.kappa),
                    str(rec.t),
                    _fmt(rec.prediction_error),
                    _fmt(rec.bound),
                    _fmt(rec.sigma_min_Mhat),
                ]
            )


def write_summary_csv(path, summaries: list[SummaryRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kappa", "avg_error", "avg_bound"])
        for rec in summaries:
            writer.writerow([_fmt(rec.kappa), _fmt(rec.avg_error), _fmt(rec.avg_bound)])


def write_single_csv(path, records: list[SingleRecord], p: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if p == 1:
            writer.writerow(["t", "baseline", "perturbed", "error", "bound"])
        else:
            writer.writerow(
                ["t"]
                + [f"baseline_{i}" for i in range(p)]
                + [f"perturbed_{i}" for i in range(p)]
                + ["error", "bound"]
            )
        for rec in records:
            row = [str(rec.t)]
            row += [_fmt(v) for v in np.atleast_1d(rec.baseline)]
            row += [_fmt(v) for v in np.atleast_1d(rec.perturbed)]
            row += [_fmt(rec.error), _fmt(rec.bound)]
            writer.writerow(row)
