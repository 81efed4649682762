import numpy as np
import pytest


def pytest_configure(config):
    config._acceptance_results = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        label, passed = results[num]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {num}: {verdict} - {label}")


@pytest.fixture
def record_acceptance(request):
    """Collect sub-assert failures for one criterion, then assert none."""

    def _record(num: int, label: str, failures: list[str]):
        request.config._acceptance_results[num] = (label, not failures)
        assert not failures, f"acceptance {num} ({label}): " + "; ".join(failures)

    return _record


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> np.ndarray:
    a = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_filter(rng: np.random.Generator, min_det: float = 0.1) -> np.ndarray:
    # nonsingular 2x2, spectral norm 1
    while True:
        f = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        f = f / np.linalg.norm(f, 2)
        if abs(np.linalg.det(f)) > min_det:
            return f
