"""Two-qubit states: construction, validation, and representation changes.

A state lives in three equivalent forms:

* density matrix ``rho`` (4x4 complex, Hermitian, unit trace, PSD),
* Pauli form ``(r, s, T)`` -- local Bloch vectors plus the 3x3
  correlation block,
* Mueller matrix ``M`` -- the full 4x4 table of Pauli expectation
  values M_ij = Tr[rho (sigma_i x sigma_j)], with sigma_0 = identity.

Conventions fixed here and inherited by every other module: Pauli order
(1, sx, sy, sz), qubit order Alice (x) Bob, M row 0 = (1, s), column 0 =
(1, r)^T.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PAULI",
    "InvalidStateError",
    "StateFileError",
    "TwoQubitState",
    "MuellerMatrix",
    "FamilySpec",
    "ValidityReport",
    "from_pauli",
    "validate",
    "to_mueller",
    "from_mueller",
    "make_family",
    "depolarize",
    "bell_state",
    "load_state_file",
    "parse_state_spec",
]

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: Pauli basis (identity, x, y, z); index convention used everywhere.
PAULI = (np.eye(2, dtype=complex), _SX, _SY, _SZ)

# KRON[i, j] = sigma_i x sigma_j, precomputed for the Mueller conversions
_KRON = np.array([[np.kron(a, b) for b in PAULI] for a in PAULI])

# tolerances for physical-state validation
_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12
_PSD_TOL = -1e-9


class InvalidStateError(ValueError):
    """Raised when a matrix fails the physical-state invariants."""


class StateFileError(ValueError):
    """Raised on malformed state-file input (bad JSON, schema, or ranges)."""


def _frozen_array(x, dtype) -> np.ndarray:
    a = np.array(x, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TwoQubitState:
    """A two-qubit density matrix. ``rho`` is read-only after construction."""

    rho: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.rho, complex)
        if a.shape != (4, 4):
            raise InvalidStateError(f"rho must be 4x4, got {a.shape}")
        object.__setattr__(self, "rho", a)


@dataclass(frozen=True)
class MuellerMatrix:
    """4x4 real matrix of Pauli expectation values; m[0][0] = 1 for states."""

    m: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.m, float)
        if a.shape != (4, 4):
            raise InvalidStateError(f"m must be 4x4, got {a.shape}")
        object.__setattr__(self, "m", a)

    @property
    def r(self) -> np.ndarray:
        """Alice's Bloch vector (column 0, spatial part)."""
        return self.m[1:, 0]

    @property
    def s(self) -> np.ndarray:
        """Bob's Bloch vector (row 0, spatial part)."""
        return self.m[0, 1:]

    @property
    def t_block(self) -> np.ndarray:
        """3x3 correlation block."""
        return self.m[1:, 1:]


@dataclass(frozen=True)
class ValidityReport:
    hermitian: bool
    trace_dev: float
    min_eig: float
    ok: bool
    failures: tuple = ()


@dataclass(frozen=True)
class FamilySpec:
    """Parametric state family: bell(label), werner(p), or gisin(alpha, mu).

    ``depolarize_p`` mixes with white noise after construction
    (p = 1 leaves the state untouched). For the gisin variant the second
    amplitude is always derived from normalization, beta = sqrt(1 - alpha^2);
    it is intentionally not an input.
    """

    variant: str
    label: str | None = None
    p: float | None = None
    alpha: float | None = None
    mu: float | None = None
    depolarize_p: float | None = None

    def __post_init__(self):
        if self.variant == "bell":
            if self.label not in ("phi+", "phi-", "psi+", "psi-"):
                raise StateFileError(f"unknown bell label: {self.label!r}")
        elif self.variant == "werner":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise StateFileError(f"werner p out of range: {self.p!r}")
        elif self.variant == "gisin":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise StateFileError(f"gisin alpha out of range: {self.alpha!r}")
            if self.mu is None or not 0.0 < self.mu <= 1.0:
                raise StateFileError(f"gisin mu out of range: {self.mu!r}")
        else:
            raise StateFileError(f"unknown family variant: {self.variant!r}")
        if self.depolarize_p is not None and not 0.0 <= self.depolarize_p <= 1.0:
            raise StateFileError(
                f"depolarize_p out of range: {self.depolarize_p!r}")


def from_pauli(r, s, T) -> TwoQubitState:
    """Assemble rho = (1/4)[1x1 + r.sigma x 1 + 1 x s.sigma + sum T_ij sigma_i x sigma_j].

    Construction is total: no physicality check is performed here, run
    :func:`validate` on the result when the inputs are untrusted.
    """
    r = np.asarray(r, dtype=float).reshape(3)
    s = np.asarray(s, dtype=float).reshape(3)
    T = np.asarray(T, dtype=float).reshape(3, 3)
    m = np.empty((4, 4))
    m[0, 0] = 1.0
    m[1:, 0] = r
    m[0, 1:] = s
    m[1:, 1:] = T
    rho = np.einsum("ij,ijab->ab", m, _KRON) / 4.0
    return TwoQubitState(rho)


def validate(state: TwoQubitState) -> ValidityReport:
    """Check Hermiticity, unit trace, and positivity at the module tolerances."""
    rho = state.rho
    herm_dev = np.abs(rho - rho.conj().T).max()
    hermitian = bool(herm_dev <= _HERM_TOL)
    trace_dev = float(abs(np.trace(rho) - 1.0))
    # eigvalsh is only meaningful on the Hermitized matrix
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min())
    failures = []
    if not hermitian:
        failures.append(f"not Hermitian (max deviation {herm_dev:.3e})")
    if trace_dev > _TRACE_TOL:
        failures.append(f"trace != 1 (deviation {trace_dev:.3e})")
    if min_eig < _PSD_TOL:
        failures.append(f"negative eigenvalue ({min_eig:.3e})")
    return ValidityReport(
        hermitian=hermitian,
        trace_dev=trace_dev,
        min_eig=min_eig,
        ok=not failures,
        failures=tuple(failures),
    )


def to_mueller(state: TwoQubitState) -> MuellerMatrix:
    """M_ij = Tr[rho (sigma_i x sigma_j)]; imaginary residue is discarded."""
    m = np.einsum("ijab,ba->ij", _KRON, state.rho).real
    return MuellerMatrix(m)


def from_mueller(m: MuellerMatrix) -> TwoQubitState:
    """Inverse of :func:`to_mueller`; requires m[0][0] = 1 (unit trace)."""
    if abs(m.m[0, 0] - 1.0) > 1e-12:
        raise InvalidStateError(f"m[0][0] must be 1, got {m.m[0, 0]!r}")
    rho = np.einsum("ij,ijab->ab", m.m, _KRON) / 4.0
    return TwoQubitState(rho)


_BELL_KETS = {
    # (amplitudes over |00>,|01>,|10>,|11>)
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def bell_state(label: str) -> TwoQubitState:
    if label not in _BELL_KETS:
        raise StateFileError(f"unknown bell label: {label!r}")
    k = _BELL_KETS[label]
    return TwoQubitState(np.outer(k, k.conj()))


def _gisin(alpha: float, mu: float) -> TwoQubitState:
    # Built strictly from the Pauli expansion. beta from normalization.
    beta = np.sqrt(1.0 - alpha**2)
    rz = mu * (alpha**2 - beta**2)
    T = np.diag([-2.0 * mu * alpha * beta, -2.0 * mu * alpha * beta, 1.0 - 2.0 * mu])
    return from_pauli([0.0, 0.0, rz], [0.0, 0.0, -rz], T)


def make_family(spec: FamilySpec) -> TwoQubitState:
    """Construct the state a :class:`FamilySpec` describes."""
    if spec.variant == "bell":
        state = bell_state(spec.label)
    elif spec.variant == "werner":
        state = depolarize(bell_state("psi-"), spec.p)
    else:
        state = _gisin(spec.alpha, spec.mu)
    if spec.depolarize_p is not None:
        state = depolarize(state, spec.depolarize_p)
    return state


def depolarize(state: TwoQubitState, p: float) -> TwoQubitState:
    """White noise: (1-p)/4 * identity + p * rho. p=1 is the identity map."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p out of range: {p!r}")
    rho = (1.0 - p) / 4.0 * np.eye(4) + p * state.rho
    return TwoQubitState(rho)


# ---------------------------------------------------------------------------
# state-file ingestion (JSON) -- shared by the CLI

def parse_state_spec(doc: dict) -> TwoQubitState:
    """Build a state from a parsed state-file document.

    Two shapes are accepted: {"matrix": [[[re, im] x4] x4]} row-major, or
    {"family": {"variant": ...}}. An optional top-level {"depolarize": p}
    applies white noise last. Structural problems raise
    :class:`StateFileError`; a well-formed matrix that is unphysical does
    not -- run :func:`validate` for that.
    """
    if not isinstance(doc, dict):
        raise StateFileError("state file must contain a JSON object")
    extra_top = set(doc) - {"matrix", "family", "depolarize"}
    if extra_top:
        raise StateFileError(f"unknown state-file keys: {sorted(extra_top)}")
    has_matrix = "matrix" in doc
    has_family = "family" in doc
    if has_matrix == has_family:
        raise StateFileError('state file needs exactly one of "matrix" or "family"')

    if has_matrix:
        raw = doc["matrix"]
        try:
            arr = np.asarray(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise StateFileError(f"matrix entries must be [re, im] pairs: {exc}")
        if arr.shape != (4, 4, 2):
            raise StateFileError(
                f'"matrix" must be 4x4 with [re, im] entries, got shape {arr.shape}')
        state = TwoQubitState(arr[..., 0] + 1j * arr[..., 1])
    else:
        fam = doc["family"]
        if not isinstance(fam, dict) or "variant" not in fam:
            raise StateFileError('"family" must be an object with a "variant"')
        known = {"variant", "label", "p", "alpha", "mu"}
        extra = set(fam) - known
        if extra:
            raise StateFileError(f"unknown family keys: {sorted(extra)}")
        spec = FamilySpec(
            variant=fam.get("variant"),
            label=fam.get("label"),
            p=fam.get("p"),
            alpha=fam.get("alpha"),
            mu=fam.get("mu"),
        )
        state = make_family(spec)

    if "depolarize" in doc:
        p = doc["depolarize"]
        if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
            raise StateFileError(f'"depolarize" must be a number in [0,1], got {p!r}')
        state = depolarize(state, float(p))
    return state


def load_state_file(path) -> TwoQubitState:
    """Read and parse a JSON state file; see :func:`parse_state_spec`."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise StateFileError(f"cannot read state file: {exc}")
    except json.JSONDecodeError as exc:
        raise StateFileError(f"state file is not valid JSON: {exc}")
    return parse_state_spec(doc)
