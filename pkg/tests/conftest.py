import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


def gaussian_pair(rho: float, T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((T, 2))
    x = g[:, 0]
    y = rho * g[:, 0] + math.sqrt(1.0 - rho * rho) * g[:, 1]
    return x, y


def student_pair(rho: float, alpha: float, T: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    x, y = gaussian_pair(rho, T, seed)
    w = np.random.default_rng(seed + 10_000).chisquare(alpha, T)
    s = np.sqrt(w / alpha)
    return x / s, y / s


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
