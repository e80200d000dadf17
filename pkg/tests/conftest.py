import numpy as np
import pytest

from zklab.spectral import Grid2D


@pytest.fixture
def grid64():
    return Grid2D.centered(64, 12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def bandlimited_field(grid, rng, kmax=6):
    """Random real field with modes |j|, |k| <= kmax only."""
    c = np.zeros(grid.shape, dtype=complex)
    for j in range(-kmax, kmax + 1):
        for k in range(-kmax, kmax + 1):
            c[j, k] = rng.normal() + 1j * rng.normal()
    # Hermitian symmetrisation keeps the field real
    c = 0.5 * (c + np.conj(np.roll(c[::-1, ::-1], 1, axis=(0, 1))))
    return np.fft.ifft2(c).real * grid.nx * grid.ny / (2 * kmax + 1) ** 2


# (criterion number, title, passed) recorded by test_acceptance.py
ACCEPTANCE: list[tuple[int, str, bool]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num} {'PASS' if ok else 'FAIL'}: {title}")
