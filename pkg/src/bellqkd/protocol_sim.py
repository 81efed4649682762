"""Seeded Monte Carlo for the filter-then-measure QKD protocol.

Each round optionally applies local filtering as a four-outcome
measurement with post-selection on the double click, then both parties
measure spin along randomly chosen directions: their two key bases, or
the optimal CHSH settings for a test subsample. Sifting keeps key rounds
with matching basis indices; Bob flips his bit in bases carrying a
negative correlation sign so that agreement is the success event.

Randomness comes from numpy's counter-based Philox generator, consumed
in blocks of fixed size with a fixed per-block draw order (filter
uniform when filtering is on, test flag, Alice index, Bob index, outcome
uniform), so a (state, config) pair reproduces its report bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filtering import apply_filters, optimal_filters
from .metrics import (chsh_value, correlation_spectrum,
                      optimal_chsh_settings, qber)
from .states import PAULI, TwoQubitState

__all__ = ["SimConfig", "SimReport", "born_joint_distribution",
           "run_protocol"]

_BLOCK = 1 << 19  # draw-block length; part of the reproducibility contract


@dataclass(frozen=True)
class SimConfig:
    """Protocol run parameters.

    Measurement bases are not configured: key bases come from the two
    leading singular-direction pairs of the measured state and the CHSH
    settings from :func:`optimal_chsh_settings`.
    """

    rounds: int
    seed: int
    with_filtering: bool = False
    chsh_test_fraction: float = 0.1

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 <= self.chsh_test_fraction < 1.0:
            raise ValueError("chsh_test_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SimReport:
    rounds_total: int
    rounds_filter_accepted: int
    rounds_sifted: int
    key_bits: int
    q_emp: float
    s_emp: float | None  # None when the test subsample misses a setting pair
    accept_rate: float
    q_analytic: float
    s_analytic: float
    p_succ_analytic: float


def born_joint_distribution(state: TwoQubitState, a, b) -> np.ndarray:
    """Joint outcome probabilities for spin measurements along a and b.

    Returns [p(+,+), p(+,-), p(-,+), p(-,-)] with
    p(s,t) = Tr[rho (1 + s a.sigma)/2 x (1 + t b.sigma)/2].
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for v in (a, b):
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError("measurement direction must be a unit 3-vector")
    sa = a[0] * PAULI[1] + a[1] * PAULI[2] + a[2] * PAULI[3]
    sb = b[0] * PAULI[1] + b[1] * PAULI[2] + b[2] * PAULI[3]
    probs = np.empty(4)
    k = 0
    for s in (1.0, -1.0):
        for t in (1.0, -1.0):
            proj = np.kron((PAULI[0] + s * sa) / 2.0,
                           (PAULI[0] + t * sb) / 2.0)
            probs[k] = np.trace(state.rho @ proj).real
            k += 1
    if probs.min() < -1e-12 or abs(probs.sum() - 1.0) > 1e-12:
        raise RuntimeError("Born probabilities inconsistent")
    return np.clip(probs, 0.0, None)


def _filter_povm_probs(state: TwoQubitState, pair) -> np.ndarray:
    # outcome order: (1,1), (1,2), (2,1), (2,2); "both 1" is the keep event
    ea = pair.m1.conj().T @ pair.m1
    eb = pair.n1.conj().T @ pair.n1
    eye = np.eye(2)
    probs = np.empty(4)
    k = 0
    for A in (ea, eye - ea):
        for B in (eb, eye - eb):
            probs[k] = np.trace(state.rho @ np.kron(A, B)).real
            k += 1
    if probs.min() < -1e-10 or abs(probs.sum() - 1.0) > 1e-10:
        raise RuntimeError("filter POVM probabilities inconsistent")
    return np.clip(probs, 0.0, None)


def run_protocol(state: TwoQubitState, config: SimConfig) -> SimReport:
    """Simulate the protocol and report empirical QBER, CHSH and counts.

    Raises the X-form error if filtering is requested on a state without
    a diagonal normal form, and ValueError when no rounds survive
    sifting (q_emp would be undefined).
    """
    if config.with_filtering:
        pair = optimal_filters(state)  # X-form error propagates
        measured, p_succ = apply_filters(state, pair)
        povm = _filter_povm_probs(state, pair)
        p_keep = float(povm[0])
    else:
        measured, p_succ = state, 1.0
        p_keep = 1.0

    spec = correlation_spectrum(measured)
    settings = optimal_chsh_settings(spec)
    key_pairs = [(spec.alice_dirs[i], spec.bob_dirs[j])
                 for i in range(2) for j in range(2)]
    chsh_pairs = [(av, bv) for av in (settings.a0, settings.a1)
                  for bv in (settings.b0, settings.b1)]
    # row layout: key (i,j) rows 0..3, chsh (i,j) rows 4..7
    table = np.vstack([born_joint_distribution(measured, av, bv)
                       for av, bv in key_pairs + chsh_pairs])
    cum = np.cumsum(table, axis=1)
    cum[:, -1] = 1.0
    flip = np.asarray(spec.signs) < 0

    rng = np.random.Generator(np.random.Philox(config.seed))
    accepted = 0
    sifted = 0
    errors = 0
    chsh_cnt = np.zeros(4, dtype=np.int64)
    chsh_sum = np.zeros(4)
    left = int(config.rounds)
    while left > 0:
        n = min(_BLOCK, left)
        left -= n
        if config.with_filtering:
            keep = rng.random(n) < p_keep
        else:
            keep = np.ones(n, dtype=bool)
        is_test = rng.random(n) < config.chsh_test_fraction
        ai = rng.integers(0, 2, size=n)
        bi = rng.integers(0, 2, size=n)
        uo = rng.random(n)

        accepted += int(keep.sum())
        row = (np.where(is_test, 4, 0) + 2 * ai + bi)[keep]
        out = (uo[keep, None] > cum[row]).sum(axis=1)
        sa = np.where(out < 2, 1, -1)
        sb = np.where(out % 2 == 0, 1, -1)

        tk = is_test[keep]
        akk, bkk = ai[keep], bi[keep]
        matched = ~tk & (akk == bkk)
        abit = sa < 0
        bbit = (sb < 0) ^ flip[bkk]
        sifted += int(matched.sum())
        errors += int((matched & (abit != bbit)).sum())

        cell = (2 * akk + bkk)[tk]
        chsh_cnt += np.bincount(cell, minlength=4)
        chsh_sum += np.bincount(cell, weights=(sa * sb)[tk], minlength=4)

    if sifted == 0:
        raise ValueError("zero sifted rounds: q_emp undefined")
    q_emp = errors / sifted
    if chsh_cnt.min() >= 1:
        corr = chsh_sum / chsh_cnt
        s_emp = float(corr[0] + corr[1] + corr[2] - corr[3])
    else:
        s_emp = None
    return SimReport(
        rounds_total=int(config.rounds),
        rounds_filter_accepted=accepted,
        rounds_sifted=sifted,
        key_bits=sifted,
        q_emp=float(q_emp),
        s_emp=s_emp,
        accept_rate=accepted / int(config.rounds),
        q_analytic=qber(spec, 2),
        s_analytic=chsh_value(measured, settings),
        p_succ_analytic=float(p_succ),
    )
