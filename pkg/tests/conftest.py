import pytest
from hypothesis import HealthCheck, settings

from helmetid.simulator import ScenarioConfig, camera_preset, generate_play

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def clean_play():
    return generate_play(ScenarioConfig(seed=3, n_frames=80))


@pytest.fixture(scope="session")
def noisy_play():
    return generate_play(ScenarioConfig(seed=4, n_frames=80, jitter_sigma=2.0, fp_rate=0.05, fn_rate=0.05))


@pytest.fixture(scope="session")
def endzone_play():
    return generate_play(ScenarioConfig(seed=5, n_frames=60), camera_preset("endzone"))


_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record an acceptance verdict; the terminal summary lists them all."""

    def record(name: str, ok: bool, detail: str) -> bool:
        _CRITERIA.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
