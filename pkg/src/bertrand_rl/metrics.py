"""Convergence, dispersion, and collusion measures over the final price window.

Every published number is computed over the last ``WINDOW`` (10,000) steps of
a run; shorter traces are rejected rather than silently analyzed on a smaller
window so results stay comparable.

Label convention at the thresholds: eta >= 0.2 is Dispersion (the boundary
value itself disperses), kappa < 0.05 is Competition (the boundary value
itself colludes).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import WindowError
from .markets import EquilibriumInfo

WINDOW = 10_000

ETA_DISPERSION = 0.2
KAPPA_COMPETITION = 0.05


class Label(str, enum.Enum):
    COMPETITION = "Competition"
    COLLUSION = "Collusion"
    DISPERSION = "Dispersion"


@dataclass(frozen=True)
class RunClassification:
    """Outcome of one run; kappa is None when the run dispersed."""

    eta: float
    kappa: Optional[float]
    label: Label


def _window(p0, p1) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    if p0.shape != p1.shape or p0.ndim != 1:
        raise ValueError("price series must be two equal-length 1-D arrays")
    if len(p0) != WINDOW:
        raise WindowError(f"analysis window needs exactly {WINDOW} steps, got {len(p0)}")
    return p0, p1


def eta(p0, p1, p_nash: float, p_mono: float) -> float:
    """Mean absolute price gap between the firms, normalized by p_mono - p_nash."""
    if not p_mono > p_nash:
        raise ValueError("need monopoly price above Nash price")
    p0, p1 = _window(p0, p1)
    return float(np.mean(np.abs(p0 - p1)) / (p_mono - p_nash))


def kappa(p0, p1, p_nash: float, p_mono: float) -> float:
    """Mean elevation of the average price above Nash, normalized to [0, 1]."""
    if not p_mono > p_nash:
        raise ValueError("need monopoly price above Nash price")
    p0, p1 = _window(p0, p1)
    return float(np.mean(p0 + p1 - 2.0 * p_nash) / (2.0 * (p_mono - p_nash)))


def rpdi(price, p_nash: float, p_mono: float):
    """Relative price deviation index (p - p_nash) / (p_mono - p_nash).

    May fall outside [0, 1] when the action range extends past the
    equilibrium band. Accepts scalars or arrays.
    """
    if not p_mono > p_nash:
        raise ValueError("need monopoly price above Nash price")
    scaled = (np.asarray(price, dtype=np.float64) - p_nash) / (p_mono - p_nash)
    return float(scaled) if scaled.ndim == 0 else scaled


def delta(mean_profit: float, nash_profit: float, mono_profit: float) -> float:
    """Window-mean profit normalized between Nash (0) and monopoly (1)."""
    if not mono_profit > nash_profit:
        raise ValueError("need monopoly profit above Nash profit")
    return (mean_profit - nash_profit) / (mono_profit - nash_profit)


def classify(p0, p1, eq: EquilibriumInfo) -> RunClassification:
    """Three-way label for one run's final window.

    Dispersed runs (eta at or above the threshold) are not assessed for
    collusion, so kappa comes back as None there.
    """
    e = eta(p0, p1, eq.nash_price, eq.monopoly_price)
    if e >= ETA_DISPERSION:
        return RunClassification(e, None, Label.DISPERSION)
    k = kappa(p0, p1, eq.nash_price, eq.monopoly_price)
    label = Label.COMPETITION if k < KAPPA_COMPETITION else Label.COLLUSION
    return RunClassification(e, k, label)
