"""Deterministic trajectories, error windows and their numeric certification.

Time is scaled as t = i / n^2, so Phase 1 lives on [0, 1/6]. The error
functions contain p^(-100 kappa) with kappa ~ 10^4 / s, which overflows a
double almost immediately; everything built from them is computed in log
space, and the supersolution slacks are reported divided by
n^(-omega) p^(-100 kappa) so they stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import special_probability

T_END = 1 / 6

POWERS = {
    "q": 3, "y": 1, "a": 2, "b": 2, "c": 2, "c1": 1, "c2": 1,
    "d": 3, "e": 3, "f": 3, "z0": 3, "z1": 2, "z2": 1,
}
TRAJECTORIES = tuple(POWERS)
ODE_IDS = ("a", "c1", "c2", "d", "z0", "z1", "z2")

# g_x = n^-omega * p^-(100 kappa + OFFSET[x])
ERROR_OFFSETS = {"g_ab": 0, "g_c1": 2, "g_c2": 1, "g_def": -3, "g_0": -5, "g_1": -1, "g_2": 1}
ERRORS = ("g_y", "g_q", "g_ab", "g_c1", "g_c2", "g_def", "g_0", "g_1", "g_2", "g_c")


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryParams:
    n: float
    epsilon: float

    @property
    def s(self) -> float:
        return special_probability(self.epsilon)

    @property
    def delta(self) -> float:
        s = self.s
        return 1e-7 * s * (1 - s) ** 4

    @property
    def kappa(self) -> float:
        s = self.s
        return 1e4 / (s * (1 - s) ** 4)

    @property
    def omega(self) -> float:
        return 100 * (self.kappa + 1) * self.delta

    @property
    def t_max(self) -> float:
        return -math.expm1(-self.delta * math.log(self.n)) / 6

    @property
    def i_max(self) -> float:
        return self.t_max * self.n**2


def _check_t(t: float, hi: float = T_END) -> None:
    if not (-1e-12 <= t <= hi + 1e-12):
        raise DomainError(f"t={t} outside [0, {hi}]")


def p_of(t: float) -> float:
    _check_t(t)
    return 1 - 6 * t


def r_of(t: float, s: float) -> float:
    _check_t(t)
    return math.exp(-(7776 / 25) * (1 - s) ** 2 * t**3)


def traj(name: str, t: float, s: float) -> float:
    """Scaled trajectory value; the raw prediction is n**POWERS[name] times this."""
    if name not in POWERS:
        raise KeyError(f"unknown trajectory {name!r}")
    p = p_of(t)
    r = r_of(t, s)
    u = 1 - s
    if name == "q":
        return p**3 / 6
    if name == "y":
        return p**2
    if name in ("a", "b"):
        return 5 / 6 * s * u**2 * p**5 * r**2
    if name == "c1":
        return 5 / 6 * s * u * p**2 * r
    if name == "c2":
        return 5 / 6 * u**2 * p**3 * r**2
    if name == "c":
        return 25 / 36 * s * u**3 * p**5 * r**3
    if name in ("d", "e", "f"):
        return 5 / 6 * s * u**3 * p**7 * r**3
    if name == "z0":
        return 5 / 6 * u**5 * p**9 * r**3
    if name == "z1":
        return u**4 * (1 - p) * p**6 * r**2
    return 6 / 5 * u**3 * (1 - p) ** 2 * p**3 * r  # z2


def predicted(name: str, t: float, s: float, n: float) -> float:
    return n ** POWERS[name] * traj(name, t, s)


def ode_rhs(name: str, t: float, s: float) -> float:
    """Right-hand side of the trajectory ODE system, built from trajectory values."""
    v = {k: traj(k, t, s) for k in ("q", "y", "a", "c", "c1", "c2", "d", "z0", "z1", "z2")}
    q, y, a, c, d = v["q"], v["y"], v["a"], v["c"], v["d"]
    z0, z1, z2 = v["z0"], v["z1"], v["z2"]
    qc = q * c
    if name in ("a", "b"):
        return -5 * a * d / (2 * qc) - 6 * a * a * z2 / qc - 2 * a * y / q
    if name == "c1":
        c1 = v["c1"]
        return -5 * d * c1 / (3 * qc) - 3 * a * z2 * c1 / qc
    if name == "c2":
        c2 = v["c2"]
        return -5 * d * c2 / (2 * qc) - 6 * a * z2 * c2 / qc
    if name in ("d", "e", "f"):
        return -20 * d * d / (6 * qc) - 9 * a * z2 * d / qc - 3 * y * d / q
    if name == "z0":
        return -5 * d * z0 / qc - 9 * a * z2 * z0 / qc - 3 * y * z0 / q
    if name == "z1":
        return a * z0 / qc - 10 * d * z1 / (3 * qc) - 6 * a * z2 * z1 / qc - 2 * y * z1 / q
    if name == "z2":
        return 2 * a * z1 / qc - 5 * d * z2 / (3 * qc) - 3 * a * z2 * z2 / qc - y * z2 / q
    raise KeyError(f"no ODE for {name!r}")


def ode_residual(name: str, t: float, s: float, h: float = 1e-5) -> float:
    """|central difference of traj(name) - ode_rhs(name)| at t."""
    _check_t(t - h)
    _check_t(t + h)
    deriv = (traj(name, t + h, s) - traj(name, t - h, s)) / (2 * h)
    return abs(deriv - ode_rhs(name, t, s))


def grid(points: int = 50, lo: float = 0.01, hi: float = 0.15) -> np.ndarray:
    return np.linspace(lo, hi, points)


def max_ode_residual(s_values=(0.01, 0.05), points: int = 50, h: float = 1e-5) -> float:
    return max(ode_residual(name, float(t), s, h)
               for s in s_values for t in grid(points) for name in ODE_IDS)


# --- error functions ------------------------------------------------------

def log_err(name: str, t: float, params: TrajectoryParams) -> float:
    """Natural log of an error-window width.

    Finite on all of [0, 1/6), unlike ``err``, whose linear value is only
    meaningful up to t_max.
    """
    _check_t(t)
    ln = math.log(params.n)
    d = params.delta
    if name == "g_y":
        return (-0.5 + d) * ln
    if name == "g_q":
        return (-1 + 2 * d) * ln
    p = p_of(t)
    if name in ERROR_OFFSETS:
        return -params.omega * ln - (100 * params.kappa + ERROR_OFFSETS[name]) * math.log(p)
    if name == "g_c":
        s = params.s
        x = math.log(traj("c2", t, s)) + log_err("g_c1", t, params)
        y = math.log(traj("c1", t, s)) + log_err("g_c2", t, params)
        hi = max(x, y)
        return math.log(2) + hi + math.log(math.exp(x - hi) + math.exp(y - hi))
    raise KeyError(f"unknown error function {name!r}")


def err(name: str, t: float, params: TrajectoryParams) -> float:
    """Error-window width on [0, t_max]; math.inf if it exceeds the double range."""
    if name not in ("g_y", "g_q"):
        _check_t(t, params.t_max)
    lg = log_err(name, t, params)
    return math.exp(lg) if lg < 709 else math.inf


def _scaled_errors(t: float, params: TrajectoryParams) -> dict[str, float]:
    """Error functions divided by n^-omega p^-100kappa, plus g_c the same way."""
    p = p_of(t)
    out = {k: p ** (-off) for k, off in ERROR_OFFSETS.items()}
    s = params.s
    out["g_c"] = 2 * (traj("c2", t, s) * out["g_c1"] + traj("c1", t, s) * out["g_c2"])
    return out


def _scaled_derivative(name: str, t: float, params: TrajectoryParams) -> float:
    p = p_of(t)
    h = 100 * params.kappa + ERROR_OFFSETS[name]
    return 6 * h * p ** (-(h - 100 * params.kappa) - 1)


SUPERSOLUTION_IDS = ("g_ab", "g_c1", "g_c2", "g_def", "g_0", "g_1", "g_2")


def check_supersolution(t: float, params: TrajectoryParams) -> dict[str, float]:
    """The seven supersolution left-hand sides at t, each divided by
    n^-omega p^-100kappa (a positive factor, so signs are preserved).

    The scaled values are finite on all of [0, 1/6), which is where the
    positivity check is run; the unscaled slacks overflow past t_max.
    """
    _check_t(t)
    p = p_of(t)
    k = params.kappa
    g = _scaled_errors(t, params)
    d = {name: _scaled_derivative(name, t, params) for name in SUPERSOLUTION_IDS}
    gab, gc, gdef, g2 = g["g_ab"], g["g_c"], g["g_def"], g["g_2"]
    return {
        "g_ab": d["g_ab"] - 30 * k * (p**2 * g2 + gab / p + gc / p),
        "g_c1": d["g_c1"] - 30 * k * (g2 / p + gab / p**3 + gc / p**4 + gdef / p**6),
        "g_c2": d["g_c2"] - 30 * k * (g2 / p + gab / p**2 + gc / p**3 + gdef / p**5),
        "g_def": d["g_def"] - 30 * k * (p**4 * g2 + gdef / p + p**2 * gab + p * gc),
        "g_0": d["g_0"] - 30 * k * (p**6 * g2 + p * gdef + p**4 * gab + p**3 * gc),
        "g_1": d["g_1"] - 40 * k * (p**3 * g2 + gdef / p**2 + p * gab + gc / p),
        "g_2": d["g_2"] - 40 * k * (g2 / p + gdef / p**5 + gab / p**2 + gc / p**3),
    }


def supersolution_lower_forms(t: float, params: TrajectoryParams) -> dict[str, float]:
    """Closed-form lower bounds of the slacks (same scaling as
    ``check_supersolution``), obtained from g_c <= 4 n^-omega p^(-100kappa+1)."""
    p = p_of(t)
    k = params.kappa
    return {
        "g_ab": k * (570 / p - 30 * p - 120),
        "g_c1": (420 * k + 12) / p**3 - 30 * k / p**2,
        "g_c2": (390 * k + 6) / p**2,
        "g_def": (420 * k - 18) * p**2 - 30 * k * p**3,
        "g_0": (420 * k - 30) * p**4 - 30 * k * p**5,
        "g_1": (440 * k - 6) - 80 * k * p - 40 * k * p**2,
        "g_2": (320 * k + 6) / p**2,
    }


def slack_log_scale(t: float, params: TrajectoryParams) -> float:
    """log of the factor n^-omega p^-100kappa dividing the reported slacks."""
    return -params.omega * math.log(params.n) - 100 * params.kappa * math.log(p_of(t))


def helper_inequalities(t: float, s: float) -> dict[str, tuple[float, float]]:
    """(lhs, rhs) for d/qc <= 50/p, a z2/qc <= 10, a/qc <= 10/p^3, y/q <= 10/p."""
    p = p_of(t)
    q, y, a, c, d, z2 = (traj(k, t, s) for k in ("q", "y", "a", "c", "d", "z2"))
    qc = q * c
    return {
        "d/qc": (d / qc, 50 / p),
        "a*z2/qc": (a * z2 / qc, 10.0),
        "a/qc": (a / qc, 10 / p**3),
        "y/q": (y / q, 10 / p),
    }


def max_second_derivative(s: float, points: int = 200, h: float = 1e-4) -> float:
    """Largest |finite-difference second derivative| of any trajectory on [h, 1/6 - h]."""
    ts = np.linspace(h, T_END - h, points)
    best = 0.0
    for name in TRAJECTORIES:
        for t in ts:
            t = float(t)
            v = (traj(name, t + h, s) - 2 * traj(name, t, s) + traj(name, t - h, s)) / h**2
            best = max(best, abs(v))
    return best


def table(epsilon: float, points: int = 50, lo: float = 0.01, hi: float = 0.15,
          n: float | None = None) -> list[dict[str, float]]:
    """Rows of trajectory values (and log error widths when n is given)."""
    s = special_probability(epsilon)
    params = TrajectoryParams(n=n, epsilon=epsilon) if n is not None else None
    rows = []
    for t in grid(points, lo, hi):
        t = float(t)
        row = {"t": t, "p": p_of(t), "r": r_of(t, s)}
        for name in ("q", "y", "a", "c1", "c2", "c", "d", "z0", "z1", "z2"):
            row[name] = traj(name, t, s)
        if params is not None:
            for name in ERRORS:
                try:
                    row[f"log_{name}"] = log_err(name, t, params)
                except DomainError:
                    row[f"log_{name}"] = math.nan
        rows.append(row)
    return rows
