from __future__ import annotations

import numpy as np
import pytest

from axmhd.grid_fields import CylGrid, Parity, make_grid, sample

# |exp(-r^2 - z^2)|_{L^2(R^3)} = (pi/2)^{3/4}
GAUSS_L2 = (np.pi / 2.0) ** 0.75


def gauss(R, Z):
    return np.exp(-R * R - Z * Z)


def strip_grid(Nr: int) -> CylGrid:
    """Nr x 2Nr grid on r < 4, |z| < 4 (dr = dz)."""
    return make_grid(Nr, 2 * Nr, 4.0, 8.0)


@pytest.fixture
def grid64() -> CylGrid:
    return strip_grid(64)


@pytest.fixture
def gauss_field(grid64):
    return sample(gauss, grid64, Parity.EVEN)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def acceptance_line(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
