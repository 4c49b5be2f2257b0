"""Problem instances for peak-priced refrigeration scheduling.

The controlled system is the facility temperature ``x`` (0 is the set
point).  Each stage ``t`` the controller removes ``u_t >= 0`` units of
heat, random heat ``q_t >= 0`` flows in, and

    x_{t+1} = x_t - u_t + q_t
    y_{t+1} = max(y_t, u_t)        (running peak load)

Costs per stage are an ordering cost ``K + a_t * u`` for ``u > 0`` plus a
convex set-point deviation penalty ``h_t(x_{t+1})``; at the end of the
horizon a demand charge ``P * max(y_init, u_1, ..., u_T)`` is due.

Time is 1-based in every public signature (``t`` in ``1..T``); internal
arrays are 0-based.  All types are immutable and all operations pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import GridAlignmentError, SpecValidationError, TrajectoryError

__all__ = [
    "HeatDistribution",
    "PenaltyParams",
    "OrderingParams",
    "ProblemSpec",
    "Grids",
    "Trajectory",
    "CostBreakdown",
    "penalty_cost",
    "ordering_cost",
    "stage_cost",
    "step_dynamics",
    "trajectory_cost",
    "load_spec",
    "save_spec",
]

_PROB_TOL = 1e-12
_ALIGN_TOL = 1e-9

QUADRATIC = "quadratic"
LINEAR = "linear"


def _is_multiple(value: float, step: float, tol: float = _ALIGN_TOL) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) <= tol * max(1.0, abs(ratio))


@dataclass(frozen=True)
class HeatDistribution:
    """Finite-support distribution of the heat inflow for one stage.

    Support values must be non-negative, finite, strictly ascending and
    carry probabilities summing to one.  Finite support keeps the stage
    expectation an exact sum and, when the values are lattice-aligned,
    keeps the state on the solver grid.
    """

    support: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.support:
            raise SpecValidationError("heat distribution needs at least one support point")
        values = [v for v, _ in self.support]
        probs = [p for _, p in self.support]
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise SpecValidationError(f"heat support values must be finite and >= 0, got {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpecValidationError("heat support must be strictly ascending with no duplicates")
        if any(p < 0 or p > 1 for p in probs):
            raise SpecValidationError(f"heat probabilities must lie in [0, 1], got {probs}")
        if abs(sum(probs) - 1.0) > _PROB_TOL:
            raise SpecValidationError(f"heat probabilities sum to {sum(probs)!r}, expected 1")

    @classmethod
    def from_values_probs(cls, values: Iterable[float], probs: Iterable[float]) -> "HeatDistribution":
        pairs = sorted(zip((float(v) for v in values), (float(p) for p in probs)))
        return cls(tuple(pairs))

    @classmethod
    def deterministic(cls, value: float) -> "HeatDistribution":
        return cls(((float(value), 1.0),))

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.support])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    def mean(self) -> float:
        return float(sum(v * p for v, p in self.support))


@dataclass(frozen=True)
class PenaltyParams:
    """Set-point deviation penalty ``h(x)``, convex with ``h(0) = 0``.

    Two families:
      * ``quadratic``: ``b * x**2`` above the set point, ``d * x**2`` below,
      * ``linear``:    ``b * x`` above, ``d * |x|`` below.
    """

    b: float
    d: float
    form: str = QUADRATIC

    def __post_init__(self) -> None:
        if self.form not in (QUADRATIC, LINEAR):
            raise SpecValidationError(f"unknown penalty form {self.form!r}")
        if self.b < 0 or self.d < 0:
            raise SpecValidationError("penalty coefficients must be >= 0")

    @classmethod
    def quadratic(cls, b: float, d: float) -> "PenaltyParams":
        return cls(b=float(b), d=float(d), form=QUADRATIC)

    @classmethod
    def linear(cls, b: float, d: float) -> "PenaltyParams":
        return cls(b=float(b), d=float(d), form=LINEAR)

    @classmethod
    def absolute(cls, b: float) -> "PenaltyParams":
        """Symmetric absolute deviation ``b * |x|``."""
        return cls(b=float(b), d=float(b), form=LINEAR)


@dataclass(frozen=True)
class OrderingParams:
    """Refrigeration running cost: ``K + a_t * u`` when ``u > 0``, else 0.

    ``a`` has one entry per stage, so a time-of-use tariff is just a
    non-constant ``a``.
    """

    K: float
    a: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.K < 0:
            raise SpecValidationError("setup cost K must be >= 0")
        if not self.a or any(at < 0 for at in self.a):
            raise SpecValidationError("per-unit costs a_t must be >= 0 for every stage")

    @classmethod
    def constant(cls, K: float, a: float, horizon: int) -> "OrderingParams":
        return cls(K=float(K), a=(float(a),) * horizon)


@dataclass(frozen=True)
class ProblemSpec:
    """A full scheduling instance over a horizon of ``T`` stages."""

    T: int
    heat: tuple[HeatDistribution, ...]
    penalty: tuple[PenaltyParams, ...]
    ordering: OrderingParams
    P: float
    x_init: float
    y_init: float

    def __post_init__(self) -> None:
        if self.T < 1:
            raise SpecValidationError("horizon T must be >= 1")
        for name, seq in (("heat", self.heat), ("penalty", self.penalty), ("a", self.ordering.a)):
            if len(seq) != self.T:
                raise SpecValidationError(f"per-stage list {name!r} has length {len(seq)}, expected T={self.T}")
        if self.P < 0:
            raise SpecValidationError("peak price P must be >= 0")
        if self.y_init < 0:
            raise SpecValidationError("initial peak y_init must be >= 0")

    @classmethod
    def uniform(
        cls,
        T: int,
        heat: HeatDistribution,
        penalty: PenaltyParams,
        K: float,
        a: float,
        P: float,
        x_init: float = 0.0,
        y_init: float = 0.0,
    ) -> "ProblemSpec":
        """Instance with identical per-stage data (the common test shape)."""
        return cls(
            T=T,
            heat=(heat,) * T,
            penalty=(penalty,) * T,
            ordering=OrderingParams.constant(K, a, T),
            P=float(P),
            x_init=float(x_init),
            y_init=float(y_init),
        )

    def max_heat(self) -> float:
        return max(dist.values[-1] for dist in self.heat)


@dataclass(frozen=True)
class Grids:
    """Uniform discretization of temperature, load, and peak.

    The load step equals the temperature step so ``x - u`` stays on the
    lattice, and the peak grid equals the load grid because a peak is
    only ever a past load (or the on-grid ``y_init``).  0 must be a
    temperature grid point.
    """

    x_min: float
    x_max: float
    dx: float
    u_max: float

    def __post_init__(self) -> None:
        if self.dx <= 0:
            raise SpecValidationError("grid step dx must be > 0")
        if self.x_max <= self.x_min:
            raise SpecValidationError("x_max must exceed x_min")
        if self.u_max <= 0:
            raise SpecValidationError("u_max must be > 0")
        for name, value in (("x_min", self.x_min), ("x_max", self.x_max), ("u_max", self.u_max)):
            if not _is_multiple(value, self.dx):
                raise GridAlignmentError(f"{name}={value} is not a multiple of dx={self.dx}")

    @property
    def du(self) -> float:
        return self.dx

    @property
    def nx(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx)) + 1

    @property
    def nu(self) -> int:
        return int(round(self.u_max / self.dx)) + 1

    @property
    def ny(self) -> int:
        return self.nu

    @property
    def x_values(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def u_values(self) -> np.ndarray:
        return self.dx * np.arange(self.nu)

    @property
    def y_values(self) -> np.ndarray:
        return self.u_values

    def x_index(self, x: float) -> int:
        """Index of an on-grid temperature; raises if off-lattice or outside."""
        idx = (x - self.x_min) / self.dx
        if abs(idx - round(idx)) > _ALIGN_TOL * max(1.0, abs(idx)):
            raise GridAlignmentError(f"x={x} is not on the temperature grid (dx={self.dx})")
        i = int(round(idx))
        if not 0 <= i < self.nx:
            raise GridAlignmentError(f"x={x} lies outside [{self.x_min}, {self.x_max}]")
        return i

    def y_index(self, y: float) -> int:
        idx = y / self.dx
        if abs(idx - round(idx)) > _ALIGN_TOL * max(1.0, abs(idx)):
            raise GridAlignmentError(f"y={y} is not on the peak grid (du={self.dx})")
        i = int(round(idx))
        if not 0 <= i < self.ny:
            raise GridAlignmentError(f"y={y} lies outside [0, {self.u_max}]")
        return i

    def nearest_x_index(self, x: float) -> int:
        return int(np.clip(round((x - self.x_min) / self.dx), 0, self.nx - 1))

    def nearest_y_index(self, y: float) -> int:
        return int(np.clip(round(y / self.dx), 0, self.ny - 1))

    def validate_spec(self, spec: ProblemSpec) -> None:
        """Check that a spec is solvable on this lattice."""
        if not (self.x_min <= 0.0 <= self.x_max) or not _is_multiple(-self.x_min, self.dx):
            raise GridAlignmentError("0 must be a temperature grid point")
        for t, dist in enumerate(spec.heat, start=1):
            for v, _ in dist.support:
                if not _is_multiple(v, self.dx):
                    raise GridAlignmentError(
                        f"heat support value {v} at stage {t} is not a multiple of dx={self.dx}"
                    )
        self.x_index(spec.x_init)
        self.y_index(spec.y_init)


# --------------------------------------------------------------------------
# cost formulas and dynamics
# --------------------------------------------------------------------------

def penalty_cost(params: PenaltyParams, x: float) -> float:
    """Set-point deviation penalty ``h(x)``; always >= 0, ``h(0) = 0``."""
    if params.form == QUADRATIC:
        return params.b * x * x if x >= 0 else params.d * x * x
    return params.b * x if x >= 0 else -params.d * x


def ordering_cost(params: OrderingParams, t: int, u: float) -> float:
    """Running cost of load ``u`` at stage ``t`` (1-based); 0 when idle."""
    if u < 0:
        raise SpecValidationError(f"load must be >= 0, got {u}")
    if u == 0:
        return 0.0
    return params.K + params.a[t - 1] * u


def stage_cost(spec: ProblemSpec, t: int, x: float, u: float) -> float:
    """Expected one-stage cost: ordering plus mean penalty at the next state."""
    dist = spec.heat[t - 1]
    pen = spec.penalty[t - 1]
    expected = sum(p * penalty_cost(pen, x - u + q) for q, p in dist.support)
    return ordering_cost(spec.ordering, t, u) + expected


def step_dynamics(x: float, y: float, u: float, q: float) -> tuple[float, float]:
    """One transition of (temperature, running peak)."""
    return x - u + q, max(y, u)


@dataclass(frozen=True)
class Trajectory:
    """One realized rollout: ``xs`` has T+1 entries, ``us``/``qs``/``ys`` align per stage."""

    xs: tuple[float, ...]
    us: tuple[float, ...]
    qs: tuple[float, ...]
    ys: tuple[float, ...]


@dataclass(frozen=True)
class CostBreakdown:
    """Stage-attributed realized cost of a single trajectory."""

    ordering: tuple[float, ...]
    penalty: tuple[float, ...]
    peak: float
    total: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        total = sum(self.ordering) + sum(self.penalty) + self.peak
        if math.isnan(self.total):
            object.__setattr__(self, "total", total)
        elif abs(self.total - total) > 1e-9:
            raise SpecValidationError("cost breakdown total does not match its parts")


def trajectory_cost(
    spec: ProblemSpec,
    xs: Sequence[float],
    us: Sequence[float],
    qs: Sequence[float],
) -> CostBreakdown:
    """Realized cost of one trajectory (no expectation; the caller averages).

    ``us`` and ``qs`` have length T; ``xs`` has length T+1 and must follow
    the dynamics exactly.  The peak term is ``P * max(y_init, max_t u_t)``.
    """
    T = spec.T
    if len(us) != T or len(qs) != T:
        raise TrajectoryError(f"us and qs must have length T={T}")
    if len(xs) != T + 1:
        raise TrajectoryError(f"xs must have length T+1={T + 1} (initial plus one per stage)")
    if abs(xs[0] - spec.x_init) > 1e-9:
        raise TrajectoryError(f"xs[0]={xs[0]} does not match x_init={spec.x_init}")
    for t in range(T):
        if us[t] < 0:
            raise TrajectoryError(f"load u_{t + 1}={us[t]} is negative")
        expected = xs[t] - us[t] + qs[t]
        if abs(xs[t + 1] - expected) > 1e-9:
            raise TrajectoryError(
                f"xs[{t + 1}]={xs[t + 1]} inconsistent with dynamics ({expected} expected)"
            )
    ordering = tuple(ordering_cost(spec.ordering, t + 1, us[t]) for t in range(T))
    penalty = tuple(penalty_cost(spec.penalty[t], xs[t + 1]) for t in range(T))
    peak = spec.P * max(spec.y_init, *us) if us else spec.P * spec.y_init
    return CostBreakdown(ordering=ordering, penalty=penalty, peak=peak)


# --------------------------------------------------------------------------
# JSON instance files
# --------------------------------------------------------------------------
# Schema (one document per instance):
#   horizon        int
#   peak_price     float
#   setup_cost     float
#   a, b, d        per-stage arrays (length horizon)
#   penalty_form   "quadratic" | "linear" (optional, default quadratic)
#   heat_support   list of per-stage value arrays
#   heat_prob      list of per-stage probability arrays
#   x_init, y_init floats
#   grid           {"x_min", "x_max", "dx", "u_max"}

def spec_to_dict(spec: ProblemSpec, grids: Grids | None = None) -> dict:
    doc: dict = {
        "horizon": spec.T,
        "peak_price": spec.P,
        "setup_cost": spec.ordering.K,
        "a": list(spec.ordering.a),
        "b": [p.b for p in spec.penalty],
        "d": [p.d for p in spec.penalty],
        "penalty_form": spec.penalty[0].form,
        "heat_support": [[v for v, _ in dist.support] for dist in spec.heat],
        "heat_prob": [[p for _, p in dist.support] for dist in spec.heat],
        "x_init": spec.x_init,
        "y_init": spec.y_init,
    }
    if grids is not None:
        doc["grid"] = {
            "x_min": grids.x_min,
            "x_max": grids.x_max,
            "dx": grids.dx,
            "u_max": grids.u_max,
        }
    return doc


def spec_from_dict(doc: dict) -> tuple[ProblemSpec, Grids | None]:
    try:
        T = int(doc["horizon"])
        form = doc.get("penalty_form", QUADRATIC)
        heat = tuple(
            HeatDistribution.from_values_probs(vals, probs)
            for vals, probs in zip(doc["heat_support"], doc["heat_prob"])
        )
        penalty = tuple(PenaltyParams(b=float(b), d=float(d), form=form) for b, d in zip(doc["b"], doc["d"]))
        spec = ProblemSpec(
            T=T,
            heat=heat,
            penalty=penalty,
            ordering=OrderingParams(K=float(doc["setup_cost"]), a=tuple(float(v) for v in doc["a"])),
            P=float(doc["peak_price"]),
            x_init=float(doc["x_init"]),
            y_init=float(doc["y_init"]),
        )
    except KeyError as exc:
        raise SpecValidationError(f"instance document is missing field {exc}") from exc
    grids = None
    if "grid" in doc:
        g = doc["grid"]
        grids = Grids(
            x_min=float(g["x_min"]), x_max=float(g["x_max"]), dx=float(g["dx"]), u_max=float(g["u_max"])
        )
    return spec, grids


def load_spec(path: str | Path) -> tuple[ProblemSpec, Grids | None]:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def save_spec(path: str | Path, spec: ProblemSpec, grids: Grids | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec, grids), fh, indent=2, sort_keys=True)
        fh.write("\n")
