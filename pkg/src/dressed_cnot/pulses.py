"""
Gaussian base pulses, mixing angles and the dressed-state corrected drives.

All functions accept scalars or numpy arrays of step-local time ``s`` in
``[0, tf]`` (units of 1/Omega0) unless stated otherwise, and are pure.

The correction follows the dressed-frame construction: a dark-state
mixing angle ``theta`` from the two Gaussians, a dressing angle ``mu``
regularized by ``sech``, and gains ``g_x = dmu/ds``,
``g_z = -Omega - theta_dot / tan(mu)``. Substituting ``mu`` into ``g_z``
collapses it to ``reg(s) / tau``, which is what the drives use; the
literal form is kept in :func:`gz_literal` for cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStepError, OutOfWindowError

SQRT3 = np.sqrt(3.0)
REG_CENTERS = ("as_written", "centered")

# Transitions of atom B driven in each step, as (lower level of the first
# drive, lower level of the second drive); both couple to |e>_B.
STEP_TRANSITIONS = {
    1: ("g1", "a"),
    2: ("g2", "g1"),
    3: ("a", "g2"),
}
# CSV column names of the six applied drives, ordered by step.
PULSE_COLUMNS = ("omega11", "omega1a", "omega22", "omega21", "omega3a", "omega32")


@dataclass(frozen=True)
class PulseParams:
    """Pulse shape parameters; ``tau``/``t0``/``deriv_h`` default from ``tf``/``omega0``."""

    omega0: float = 1.0
    tf: float | None = None
    tau: float | None = None
    t0: float | None = None
    reg_center: str = "as_written"
    deriv_h: float | None = None

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        tf = 20.0 / self.omega0 if self.tf is None else float(self.tf)
        object.__setattr__(self, "tf", tf)
        if self.tau is None:
            object.__setattr__(self, "tau", 0.1 * tf)
        if self.t0 is None:
            object.__setattr__(self, "t0", 0.1 * tf)
        if self.deriv_h is None:
            object.__setattr__(self, "deriv_h", 1e-6 / self.omega0)
        reg = self.reg_center.replace("-", "_")
        if reg not in REG_CENTERS:
            raise ValueError(f"reg_center must be one of {REG_CENTERS}, got {self.reg_center!r}")
        object.__setattr__(self, "reg_center", reg)
        for name in ("tf", "tau", "t0", "deriv_h"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DressedFrameGains:
    g_x: np.ndarray
    g_z: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    Omega: np.ndarray
    eta: np.ndarray
    xi: np.ndarray


def gaussian_pair(s, p: PulseParams):
    """Base pulses (Omega1, Omega2): the later and the earlier Gaussian."""
    s = np.asarray(s, dtype=float)
    c = p.tf / 2
    om1 = p.omega0 * np.exp(-((s - c - p.t0) ** 2) / p.tau**2)
    om2 = p.omega0 * np.exp(-((s - c + p.t0) ** 2) / p.tau**2)
    return om1, om2


def _log_ratio(s, p: PulseParams):
    # log(Omega1/Omega2) is linear in s, so theta stays exact where both Gaussians underflow
    return 4.0 * p.t0 * (np.asarray(s, dtype=float) - p.tf / 2) / p.tau**2


def theta_omega(s, p: PulseParams):
    """Mixing angle theta = arctan(Omega1/Omega2) and amplitude Omega = |(Omega1, Omega2)|."""
    om1, om2 = gaussian_pair(s, p)
    theta = np.arctan(np.exp(_log_ratio(s, p)))
    return theta, np.hypot(om1, om2)


def _sech(x):
    x = np.abs(x)
    return 2.0 * np.exp(-x) / (1.0 + np.exp(-2.0 * x))


def theta_dot(s, p: PulseParams):
    """Closed form d(theta)/ds = (2 t0 / tau^2) sin(2 theta).

    sin(2 theta) is evaluated as sech(log(Omega1/Omega2)); going through theta
    itself loses all relative precision once theta is within ~1e-8 of 0 or pi/2.
    """
    return (2.0 * p.t0 / p.tau**2) * _sech(_log_ratio(s, p))


def regularizer(s, p: PulseParams):
    """sech regularizer, in the literal step-local argument or centered on tf/2."""
    s = np.asarray(s, dtype=float)
    x = s / p.tau if p.reg_center == "as_written" else (s - p.tf / 2) / p.tau
    return _sech(x)


def mu(s, p: PulseParams):
    """Dressing angle mu = -arctan(theta_dot / (reg/tau + Omega)), in (-pi/2, 0]."""
    _, omega = theta_omega(s, p)
    return -np.arctan(theta_dot(s, p) / (regularizer(s, p) / p.tau + omega))


def mu_dot(s, p: PulseParams, h: float | None = None):
    """Central difference of mu with half-step ``h`` (default ``p.deriv_h``)."""
    h = p.deriv_h if h is None else h
    s = np.asarray(s, dtype=float)
    return (mu(s + h, p) - mu(s - h, p)) / (2.0 * h)


def mu_dot_richardson(s, p: PulseParams, h: float = 1e-3):
    """Richardson-extrapolated derivative of mu; independent of ``deriv_h``."""
    d1 = mu_dot(s, p, h)
    d2 = mu_dot(s, p, h / 2)
    return (4.0 * d2 - d1) / 3.0


def gz_literal(s, p: PulseParams):
    """g_z = -Omega - theta_dot / tan(mu), evaluated without simplification."""
    _, omega = theta_omega(s, p)
    return -omega - theta_dot(s, p) / np.tan(mu(s, p))


def correction_gains(s, p: PulseParams) -> DressedFrameGains:
    theta, omega = theta_omega(s, p)
    tdot = theta_dot(s, p)
    m = mu(s, p)
    g_x = mu_dot(s, p)
    # reg/tau is what -Omega - theta_dot/tan(mu) reduces to; avoids 0/0 where theta_dot -> 0
    g_z = regularizer(s, p) / p.tau
    big = g_z + omega
    eta = big * np.cos(m) - tdot * np.sin(m)
    xi = (1j * big * np.sin(m) + 1j * tdot * np.cos(m) + (mu_dot_richardson(s, p) - g_x)) / np.sqrt(2.0)
    return DressedFrameGains(g_x=g_x, g_z=g_z, mu=m, theta=theta, Omega=omega, eta=eta, xi=xi)


def modified_pair(s, p: PulseParams):
    """Corrected effective drives (Omega'1, Omega'2) before the sqrt(3) Zeno factor."""
    theta, omega = theta_omega(s, p)
    g_x = mu_dot(s, p)
    big = regularizer(s, p) / p.tau + omega
    return (
        g_x * np.cos(theta) - big * np.sin(theta),
        g_x * np.sin(theta) + big * np.cos(theta),
    )


def step_window(k: int, p: PulseParams) -> tuple[float, float]:
    if k not in (1, 2, 3):
        raise InvalidStepError(f"step must be 1, 2 or 3, got {k!r}")
    return ((k - 1) * p.tf, k * p.tf)


def _in_window(t, k: int, p: PulseParams, atol: float | None = None):
    lo, hi = step_window(k, p)
    atol = 1e-9 * p.tf if atol is None else atol
    t = np.asarray(t, dtype=float)
    return (t >= lo - atol) & (t <= hi + atol)


def step_pulses(t, k: int, p: PulseParams):
    """Applied drives (first, second) of step ``k`` at global time ``t``.

    ``first`` drives |e>_B <-> STEP_TRANSITIONS[k][0], ``second`` drives
    |e>_B <-> STEP_TRANSITIONS[k][1]. All three steps share one profile.
    """
    if not np.all(_in_window(t, k, p)):
        lo, hi = step_window(k, p)
        raise OutOfWindowError(f"time {t} outside step {k} window [{lo}, {hi}]")
    s = np.asarray(t, dtype=float) - (k - 1) * p.tf
    first, second = modified_pair(s, p)
    return SQRT3 * first, SQRT3 * second


def pulse_table(t, p: PulseParams) -> dict[str, np.ndarray]:
    """All six applied drives on a global time grid; zero outside each step's window."""
    t = np.asarray(t, dtype=float)
    out = {}
    for k in (1, 2, 3):
        mask = _in_window(t, k, p)
        first = np.zeros_like(t)
        second = np.zeros_like(t)
        if np.any(mask):
            f, g = step_pulses(t[mask], k, p)
            first[mask] = f
            second[mask] = g
        out[PULSE_COLUMNS[2 * (k - 1)]] = first
        out[PULSE_COLUMNS[2 * (k - 1) + 1]] = second
    return out
