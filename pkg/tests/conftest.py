import os
import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "algforge",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize="ALGFORGE_SEED" in os.environ,
)
settings.load_profile("algforge")


@pytest.fixture
def seed() -> int:
    return int(os.environ.get("ALGFORGE_SEED", "20240601"))


@pytest.fixture
def rng(seed) -> random.Random:
    return random.Random(seed)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "acceptance" in props:
                lines.append((props["acceptance"], "PASS" if outcome == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for title, status in sorted(lines):
        terminalreporter.write_line(f"[{status}] criterion {title}")
