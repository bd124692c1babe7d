"""Experiment harness: config ingestion, convergence studies, bound checks.

Convergence studies compare methods on dyadic grids h = 0.5^k against a
fine reference trajectory (first-order propagator with midpoint integrals by
default); errors are the maximum Frobenius distance between density matrices
over the coarse method's own grid points, all of which nest inside the
reference grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import expm as expm_mod
from . import observables, quadrature, solvers, spinalg
from .errors import ConfigError
from .errors import StepFailureError
from .hamiltonian import SpinSystem, spin_from_json
from .observables import ObservableSpec
from .solvers import TimeGrid, Trajectory, propagate
from .spinalg import term_list_from_json

REFERENCE_METHOD = "magnus1"
REFERENCE_RULE = "midpoint"


def fmt17(x) -> str:
    """17-significant-digit decimal text, the format of all numeric output."""
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class RunConfig:
    t_span: Tuple[float, float]
    k: int
    system: SpinSystem
    method: str = "magnus1"
    rule: str = "midpoint"
    expm_backend: str = "pade"
    krylov_m: Optional[int] = None
    observables: Tuple[ObservableSpec, ...] = ()
    output_path: str = "trajectory.csv"

    def grid(self, k: Optional[int] = None) -> TimeGrid:
        return TimeGrid(t0=self.t_span[0], tf=self.t_span[1], k=self.k if k is None else k)


def system_from_json(obj: dict) -> SpinSystem:
    try:
        n_spins = int(obj["n_spins"])
        spins_raw = obj["spins"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"system spec missing field: {exc}") from None
    if not spins_raw:
        raise ConfigError("system spec has an empty spins list")
    scale = float(obj.get("scale", 1.0))
    try:
        spins = tuple(spin_from_json(s, scale) for s in spins_raw)
        rho0 = term_list_from_json(obj["rho0"])
        coupling = term_list_from_json(obj["coupling"]) if obj.get("coupling") else None
        return SpinSystem(n_spins=n_spins, spins=spins, rho0=rho0, coupling=coupling)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> RunConfig:
    """Read and fully validate a JSON run configuration."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON "
                          f"(line {exc.lineno}, column {exc.colno}): {exc.msg}") from None
    try:
        t_span = tuple(float(x) for x in raw["t_span"])
        k = int(raw["k"])
        system = system_from_json(raw["system"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config {path!r}: {exc}") from None
    if len(t_span) != 2 or not t_span[0] < t_span[1]:
        raise ConfigError(f"t_span must be [t0, tf] with t0 < tf, got {t_span}")
    if not 0 <= k <= 24:
        raise ConfigError(f"k={k} out of range 0..24")
    method = raw.get("method", "magnus1")
    if method not in solvers.METHOD_NAMES:
        raise ConfigError(f"unknown method {method!r}: expected one of {solvers.METHOD_NAMES}")
    rule = raw.get("rule", "midpoint")
    if rule not in quadrature.RULE_NAMES:
        raise ConfigError(f"unknown rule {rule!r}: expected one of {quadrature.RULE_NAMES}")
    backend = raw.get("expm_backend", "pade")
    if backend not in solvers.EXPM_BACKENDS:
        raise ConfigError(f"unknown expm backend {backend!r}: "
                          f"expected one of {solvers.EXPM_BACKENDS}")
    obs = []
    for entry in raw.get("observables", ()):
        try:
            spec = ObservableSpec.from_factors(entry["label"], tuple(entry["factors"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad observable entry {entry!r}: {exc}") from None
        if spec.operator.n_spins != system.n_spins:
            raise ConfigError(f"observable {spec.label!r} has {spec.operator.n_spins} factors "
                              f"for a {system.n_spins}-spin system")
        obs.append(spec)
    krylov_m = raw.get("krylov_m")
    if krylov_m is not None:
        krylov_m = int(krylov_m)
        if krylov_m < 1:
            raise ConfigError(f"krylov_m must be >= 1, got {krylov_m}")
    return RunConfig(t_span=t_span, k=k, system=system, method=method, rule=rule,
                     expm_backend=backend, krylov_m=krylov_m,
                     observables=tuple(obs), output_path=raw.get("output_path", "trajectory.csv"))


# ---------------------------------------------------------------------------
# Convergence studies


@dataclass
class SeriesResult:
    method: str
    rule: str
    rows: List[Tuple[int, float, float]]     # (k, h, max_error)
    slope: Optional[float] = None
    fit_rows: int = 0
    states: Optional[List[np.ndarray]] = None   # per-k trajectories when kept


@dataclass
class ConvergenceReport:
    t_span: Tuple[float, float]
    reference_k: int
    series: List[SeriesResult] = field(default_factory=list)
    reference_states: Optional[np.ndarray] = None


def max_state_error(states_a: np.ndarray, states_b: np.ndarray) -> float:
    """Max over rows of the Frobenius distance between density matrices."""
    diff = states_a - states_b
    return float(np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2)))))


def fit_slope(rows: Sequence[Tuple[float, float]], *, floor: Optional[float] = None) -> float:
    """Least-squares slope of log(err) against log(h).

    Rows sitting on an error plateau (err below 10x the series minimum, or
    below an explicit ``floor``) are excluded, except that the plateau
    heuristic is skipped when it would leave fewer than 3 rows.  Raises
    ValueError when fewer than 3 usable rows remain.
    """
    rows = [(float(h), float(e)) for h, e in rows if e > 0.0]
    if len(rows) < 3:
        raise ValueError(f"need at least 3 rows with positive error, got {len(rows)}")
    if floor is not None:
        kept = [(h, e) for h, e in rows if e > floor]
    else:
        cutoff = 10.0 * min(e for _, e in rows)
        kept = [(h, e) for h, e in rows if e >= cutoff]
        if len(kept) < 3:
            kept = rows
    if len(kept) < 3:
        raise ValueError(f"only {len(kept)} usable rows after plateau exclusion")
    log_h = np.log([h for h, _ in kept])
    log_e = np.log([e for _, e in kept])
    slope = np.polyfit(log_h, log_e, 1)[0]
    return float(slope)


def _reference_states(config: RunConfig, reference_k: int, sample_k: int) -> np.ndarray:
    grid = config.grid(reference_k)
    stride = 2 ** (reference_k - sample_k)
    traj = propagate(config.system, grid, method=REFERENCE_METHOD, rule=REFERENCE_RULE,
                     store_every=stride)
    return traj.states


def run_convergence(config: RunConfig, k_min: int, k_max: int, reference_k: int,
                    methods: Sequence[Tuple[str, str]],
                    fit_floor: Optional[float] = None,
                    fit_max_error: Optional[float] = None,
                    keep_states: bool = False) -> ConvergenceReport:
    """Sweep k over [k_min, k_max] for each (method, rule) series.

    The reference trajectory is computed once at ``reference_k`` and sampled
    on the k_max grid; every coarser dyadic grid nests inside it, so states
    align exactly.  ``fit_max_error`` drops rows that have not started
    converging (error at the saturation scale of distinct density matrices)
    from the slope fit; ``fit_floor`` replaces the automatic plateau cut.
    ``keep_states`` retains every computed trajectory on the report for
    downstream structure checks.
    """
    if not (0 <= k_min < k_max < reference_k):
        raise ValueError(f"need k_min < k_max < reference_k, got {k_min}, {k_max}, {reference_k}")
    ref = _reference_states(config, reference_k, k_max)
    report = ConvergenceReport(t_span=config.t_span, reference_k=reference_k,
                               reference_states=ref if keep_states else None)
    for method, rule in methods:
        rows = []
        kept = [] if keep_states else None
        for k in range(k_min, k_max + 1):
            try:
                traj = propagate(config.system, config.grid(k), method=method, rule=rule)
            except StepFailureError as exc:
                raise StepFailureError(f"{method}+{rule} at k={k}: {exc}",
                                       step=exc.step, method=method) from exc
            idx = np.arange(traj.states.shape[0]) * 2 ** (k_max - k)
            rows.append((k, 0.5 ** k, max_state_error(traj.states, ref[idx])))
            if keep_states:
                kept.append(traj.states)
        series = SeriesResult(method=method, rule=rule, rows=rows, states=kept)
        fit_rows = [(h, e) for _, h, e in rows
                    if fit_max_error is None or e <= fit_max_error]
        try:
            series.slope = fit_slope(fit_rows, floor=fit_floor)
            series.fit_rows = len(fit_rows)
        except ValueError:
            series.slope = None
        report.series.append(series)
    return report


def write_convergence_csv(report: ConvergenceReport, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("method,rule,k,h,max_error\n")
        for series in report.series:
            for k, h, err in series.rows:
                fh.write(f"{series.method},{series.rule},{k},{fmt17(h)},{fmt17(err)}\n")


def write_gnuplot_script(report: ConvergenceReport, csv_path: str, path: str) -> None:
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set xlabel 'time step h'",
        "set ylabel 'max error'",
        "set key left top",
    ]
    plots = []
    for series in report.series:
        sel = (f"(strcol(1) eq '{series.method}' && strcol(2) eq '{series.rule}' "
               f"? column(4) : NaN)")
        title = f"{series.method}+{series.rule}"
        if series.slope is not None:
            title += f" (slope {series.slope:.3f})"
        plots.append(f"'{csv_path}' using {sel}:(column(5)) with linespoints title '{title}'")
    lines.append("plot \\\n    " + ", \\\n    ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trajectory_csv(table: np.ndarray, labels: Sequence[str], path: str) -> None:
    with open(path, "w") as fh:
        header = "t" + ("," + ",".join(labels) if labels else "")
        fh.write(header + "\n")
        for row in table:
            fh.write(",".join(fmt17(x) for x in row) + "\n")


def run_simulation(config: RunConfig) -> Tuple[Trajectory, np.ndarray, List[str]]:
    traj = propagate(config.system, config.grid(), method=config.method, rule=config.rule,
                     expm_backend=config.expm_backend, krylov_m=config.krylov_m)
    uses_default_bloch = not config.observables and config.system.n_spins == 1
    if uses_default_bloch:
        table = observables.bloch_series(traj)
        labels = ["dx", "dy", "dz"]
    else:
        table = observables.observable_series(traj, config.observables)
        labels = [o.label for o in config.observables]
    return traj, table, labels


# ---------------------------------------------------------------------------
# Krylov bound validation


def run_krylov_bound_check(rho: float, t: float, dim: int, m_values: Sequence[int],
                           placement: str = "equal", seed: int = 0) -> List[dict]:
    """Measured Krylov error against the two-branch bound on a diagonal test.

    The matrix is diagonal with eigenvalues on [-4 rho, 0] (equally spaced by
    default, uniform-random with ``placement='random'``), the start vector is
    the uniform unit vector, and the exact action comes from scalar
    exponentials.  Returns one record per m with the pass flag err <= bound.
    """
    if placement == "equal":
        lam = np.linspace(-4.0 * rho, 0.0, dim)
    elif placement == "random":
        rng = np.random.default_rng(seed)
        lam = np.sort(rng.uniform(-4.0 * rho, 0.0, size=dim))
    else:
        raise ValueError(f"unknown eigenvalue placement {placement!r}")
    vec = np.ones(dim) / math.sqrt(dim)
    exact = np.exp(t * lam) * vec
    m_values = sorted(set(int(m) for m in m_values))
    if not m_values:
        raise ValueError(f"no m values to check: the bound needs m >= sqrt(4 rho t) "
                         f"= {math.sqrt(4.0 * rho * t):.2f}")
    m_top = max(m_values)
    fact = expm_mod.lanczos(np.diag(lam).astype(np.complex128), vec.astype(np.complex128), m_top)
    rows = []
    for m in m_values:
        mm = min(m, fact.m)
        small = expm_mod.pade_expm_auto(t * fact.t[:mm, :mm].astype(np.complex128))
        approx = fact.beta0 * (fact.v[:, :mm] @ small[:, 0])
        err = float(np.linalg.norm(exact - approx))
        bound = expm_mod.krylov_error_bound(rho, t, m)
        rows.append({"m": m, "error": err, "bound": bound, "passed": err <= bound})
    return rows


def krylov_valid_m_range(rho: float, t: float, m_max: int) -> List[int]:
    m_lo = int(math.ceil(math.sqrt(4.0 * rho * t)))
    return list(range(m_lo, m_max + 1))
