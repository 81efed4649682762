"""CHSH maximization, QBER/key-rate formulas, and region classification.

Everything here is driven by the singular spectrum of the 3x3
correlation block T: the single-copy CHSH optimum is
``2*sqrt(lambda1^2 + lambda2^2)``, the symmetric-attack QBER for 2 or 3
mutually unbiased key bases is an affine function of the top singular
values, and the (violation, usability) plane splits into three regions
along ``lambda1^2 + lambda2^2 = 1`` and ``lambda1 + lambda2 = sqrt(2)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .states import TwoQubitState, to_mueller

__all__ = [
    "CorrelationSpectrum",
    "ChshSettings",
    "KeyMetrics",
    "Region",
    "correlation_spectrum",
    "chsh_max",
    "optimal_chsh_settings",
    "chsh_value",
    "qber",
    "key_rate_symmetric",
    "q_crit",
    "q_crit_symmetric",
    "classify",
]


@dataclass(frozen=True)
class CorrelationSpectrum:
    """Singular data of the correlation block.

    ``lambdas`` are non-negative, sorted descending. ``alice_dirs[i]`` /
    ``bob_dirs[i]`` are the aligned singular direction pairs (rows), and
    ``signs[i]`` restores the signed correlation:
    ``alice_dirs[i] . T . bob_dirs[i] = signs[i] * lambdas[i]``.
    """

    lambdas: np.ndarray
    alice_dirs: np.ndarray  # 3x3, row i = direction for lambda_i
    bob_dirs: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        for name in ("lambdas", "alice_dirs", "bob_dirs", "signs"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class ChshSettings:
    """Bloch measurement directions (a0, a1) for Alice and (b0, b1) for Bob."""

    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            a = np.array(getattr(self, name), dtype=float).reshape(3)
            if abs(np.linalg.norm(a) - 1.0) > 1e-10:
                raise ValueError(f"{name} must be a unit vector")
            a.setflags(write=False)
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class KeyMetrics:
    q: float
    r_min: float
    distillable: bool


class Region(enum.Enum):
    """Where a state sits in the (CHSH violation, key usability) plane."""

    NONVIOLATING_UNUSABLE = "NonviolatingUnusable"
    VIOLATING_UNUSABLE = "ViolatingUnusable"
    VIOLATING_USABLE = "ViolatingUsable"


def _canonical_dir(v: np.ndarray) -> tuple[np.ndarray, float]:
    # flip so the first significant component is positive; deterministic output
    for x in v:
        if abs(x) > 1e-12:
            return (v, 1.0) if x > 0 else (-v, -1.0)
    return v, 1.0


def correlation_spectrum(state: TwoQubitState) -> CorrelationSpectrum:
    """SVD of the correlation block with a deterministic sign/order convention.

    Singular values are stored non-negative; the sign of each correlation
    moves into ``signs``. Near-equal singular values (within 1e-12) are
    ordered by comparing Alice's canonicalized directions lexicographically.
    """
    T = to_mueller(state).t_block
    U, s, Vt = np.linalg.svd(T)
    rows = []
    for i in range(3):
        a, fa = _canonical_dir(U[:, i])
        b, fb = _canonical_dir(Vt[i, :])
        rows.append((s[i], a, b, fa * fb))
    rows.sort(key=lambda r: (-round(r[0], 12), tuple(r[1])))
    return CorrelationSpectrum(
        lambdas=np.array([r[0] for r in rows]),
        alice_dirs=np.array([r[1] for r in rows]),
        bob_dirs=np.array([r[2] for r in rows]),
        signs=np.array([r[3] for r in rows]),
    )


def chsh_max(spec: CorrelationSpectrum) -> float:
    """Single-copy CHSH optimum 2*sqrt(lambda1^2 + lambda2^2)."""
    l1, l2 = spec.lambdas[0], spec.lambdas[1]
    return float(2.0 * np.sqrt(l1 * l1 + l2 * l2))


def optimal_chsh_settings(spec: CorrelationSpectrum) -> ChshSettings:
    """Settings that attain :func:`chsh_max`.

    Alice measures along the two leading singular directions (sign-folded);
    Bob measures the two rotations of his leading pair by +-theta with
    cos(theta) = lambda1 / sqrt(lambda1^2 + lambda2^2).
    """
    l1, l2 = spec.lambdas[0], spec.lambdas[1]
    norm = np.sqrt(l1 * l1 + l2 * l2)
    if norm <= 1e-15:
        raise ValueError("no correlations")
    ct, st = l1 / norm, l2 / norm
    a0 = spec.alice_dirs[0] * spec.signs[0]
    a1 = spec.alice_dirs[1] * spec.signs[1]
    b0 = ct * spec.bob_dirs[0] + st * spec.bob_dirs[1]
    b1 = ct * spec.bob_dirs[0] - st * spec.bob_dirs[1]
    return ChshSettings(a0=a0, a1=a1, b0=b0, b1=b1)


def chsh_value(state: TwoQubitState, settings: ChshSettings) -> float:
    """Bell-operator expectation a0.T(b0+b1) + a1.T(b0-b1)."""
    for v in (settings.a0, settings.a1, settings.b0, settings.b1):
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError("measurement directions must be unit vectors")
    T = to_mueller(state).t_block
    return float(settings.a0 @ T @ (settings.b0 + settings.b1)
                 + settings.a1 @ T @ (settings.b0 - settings.b1))


def qber(spec: CorrelationSpectrum, num_bases: int) -> float:
    """Symmetric QBER for 2 or 3 mutually unbiased key bases.

    2 bases: (2 - l1 - l2)/4. 3 bases: (3 - l1 - l2 - l3)/6. Output is
    clamped to [0, 1] to absorb round-off at the boundary.
    """
    l = spec.lambdas
    if num_bases == 2:
        q = (2.0 - l[0] - l[1]) / 4.0
    elif num_bases == 3:
        q = (3.0 - l[0] - l[1] - l[2]) / 6.0
    else:
        raise ValueError(f"num_bases must be 2 or 3, got {num_bases!r}")
    return float(min(max(q, 0.0), 1.0))


def key_rate_symmetric(q: float) -> KeyMetrics:
    """Key rate against symmetric attacks: r_min = 1 - 2*h(q) in entropy form.

    Written out, r_min = 1 + 2(1-q)log2(1-q) + 2q log2(q) with the
    0*log(0) = 0 convention. May be negative; ``distillable`` flags
    r_min > 0.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q out of range: {q!r}")
    r_min = 1.0
    if q > 0.0:
        r_min += 2.0 * q * np.log2(q)
    if q < 1.0:
        r_min += 2.0 * (1.0 - q) * np.log2(1.0 - q)
    return KeyMetrics(q=float(q), r_min=float(r_min), distillable=bool(r_min > 0))


def q_crit() -> float:
    """Error rate of the minimal-error CHSH-saturating states: (2 - sqrt(2))/4."""
    return (2.0 - np.sqrt(2.0)) / 4.0


@lru_cache(maxsize=1)
def q_crit_symmetric() -> float:
    """Unique root of the symmetric key rate in (0, 1/2), by bisection."""
    lo, hi = 1e-12, 0.5
    while hi - lo > 1e-12:
        mid = (lo + hi) / 2.0
        if key_rate_symmetric(mid).r_min > 0.0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def classify(spec: CorrelationSpectrum) -> Region:
    """Region in the violation/usability plane from the top two singular values."""
    l1, l2 = spec.lambdas[0], spec.lambdas[1]
    if l1 * l1 + l2 * l2 <= 1.0:
        return Region.NONVIOLATING_UNUSABLE
    if l1 + l2 <= np.sqrt(2.0):
        return Region.VIOLATING_UNUSABLE
    return Region.VIOLATING_USABLE
