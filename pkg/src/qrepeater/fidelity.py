"""Werner-state fidelity algebra.

Every Bell pair is tracked as a single fidelity scalar with respect to the
target Bell state. Pairs are assumed to be twirled after each operation so
they stay in Werner form, which keeps purification and swapping closed-form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

MIXED = 0.25
PURIFY_THRESHOLD = 0.5


@dataclass(frozen=True)
class LinkModelParams:
    """Physical model of a single hop.

    ``shape="linear"`` gives ``F0 = clip(f_cap - slope * loss)``.
    ``shape="power"`` gives ``F0 = 1 - 0.5 * (loss / cutoff_db) ** exponent``,
    which is flat at low loss and reaches the purification threshold exactly
    at ``cutoff_db``.
    """

    pulse_rate: float = 1.0e6
    p_ent: float = 0.38
    f_cap: float = 1.0
    slope: float = 0.09
    shape: Literal["linear", "power"] = "linear"
    cutoff_db: float = 5.56
    exponent: float = 6.0

    def __post_init__(self):
        if not 0.0 < self.p_ent <= 1.0:
            raise ValueError(f"p_ent must be in (0, 1], got {self.p_ent}")
        if self.pulse_rate <= 0:
            raise ValueError(f"pulse_rate must be positive, got {self.pulse_rate}")
        if self.shape not in ("linear", "power"):
            raise ValueError(f"unknown fidelity model shape {self.shape!r}")

    @classmethod
    def qubus_like(cls, **overrides) -> "LinkModelParams":
        """Model used by the experiments: usable links below ~5.5 dB need a
        handful of purification rounds rather than a dozen."""
        kw = dict(shape="power", cutoff_db=5.56, exponent=6.0)
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class WernerPair:
    fidelity: float
    left: str
    right: str
    created_at: float = 0.0

    def __post_init__(self):
        if self.left == self.right:
            raise ValueError("a Bell pair needs two distinct endpoints")
        check_fidelity(self.fidelity)


@dataclass(frozen=True)
class PurifyOutcome:
    success_prob: float
    new_fidelity: float


def check_fidelity(f: float) -> float:
    if not (MIXED - 1e-12 <= f <= 1.0 + 1e-12) or math.isnan(f):
        raise ValueError(f"fidelity {f} outside [0.25, 1]")
    return f


def base_fidelity(loss_db: float, model: LinkModelParams = LinkModelParams()) -> float:
    """Fidelity of a freshly generated link pair over a channel with ``loss_db``."""
    if loss_db < 0 or math.isnan(loss_db):
        raise ValueError(f"loss must be non-negative, got {loss_db}")
    if model.shape == "linear":
        f = model.f_cap - model.slope * loss_db
    else:
        f = 1.0 - 0.5 * (loss_db / model.cutoff_db) ** model.exponent
    return min(1.0, max(MIXED, f))


def purify_map(f1: float, f2: float) -> PurifyOutcome:
    """Bilateral recurrence purification of two Werner pairs."""
    check_fidelity(f1)
    check_fidelity(f2)
    g1, g2 = 1.0 - f1, 1.0 - f2
    p = f1 * f2 + f1 * g2 / 3.0 + f2 * g1 / 3.0 + 5.0 * g1 * g2 / 9.0
    return PurifyOutcome(p, (f1 * f2 + g1 * g2 / 9.0) / p)


def swap_map(f1: float, f2: float) -> float:
    """Fidelity after entanglement swapping two Werner pairs."""
    check_fidelity(f1)
    check_fidelity(f2)
    return f1 * f2 + (1.0 - f1) * (1.0 - f2) / 3.0


def rounds_to_reach(f0: float, target: float, max_rounds: int = 64) -> Optional[int]:
    """Minimal number of symmetric purification rounds lifting ``f0`` to ``target``.

    Returns ``None`` when the target is unreachable (``f0 <= 0.5`` or more than
    ``max_rounds`` would be needed).
    """
    if f0 >= target:
        return 0
    if f0 <= PURIFY_THRESHOLD:
        return None
    f = f0
    for k in range(1, max_rounds + 1):
        f = purify_map(f, f).new_fidelity
        if f >= target:
            return k
    return None
