import sys
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def report(capfd):
    """Acceptance-style reporter: one [PASS]/[FAIL] line per criterion."""

    def _report(name: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f": {detail}"
        with capfd.disabled():
            print(line, flush=True)
        assert ok, line

    return _report


def adapter_command(backend: str) -> list[str]:
    """Command line for the stdlib reference adapter."""
    return [sys.executable, str(FIXTURES / "adapter_fixture.py"), backend]


def mirror_index(i: int, n: int) -> int:
    """Whole-sample mirror used by the independent convolution oracles."""
    if n == 1:
        return 0
    period = 2 * n - 2
    i %= period
    return period - i if i >= n else i


def synthetic_image(height: int, width: int, channels: int = 1) -> np.ndarray:
    """Piecewise-smooth test scene: ramp, soft bump, one sharp disk.

    Values stay inside [0.2, 0.9] so the image is valid both as a unit
    range intensity and as a Poisson rate after peak scaling.
    """
    yy, xx = np.mgrid[0:height, 0:width]
    y = yy / max(height - 1, 1)
    x = xx / max(width - 1, 1)
    img = 0.2 + 0.35 * x + 0.25 * y
    img += 0.15 * np.exp(-((x - 0.3) ** 2 + (y - 0.4) ** 2) / 0.02)
    img = np.where((x - 0.7) ** 2 + (y - 0.65) ** 2 < 0.04, img + 0.18, img)
    planes = [np.clip(img * (1.0 - 0.08 * c), 0.0, 1.0) for c in range(channels)]
    return np.stack(planes, axis=2)
