import pytest

from eephnd.dataio import load_csv, rescale_time

REF_PARAMS = dict(alpha=2.0, beta=2.0, theta=2.0, lam=2.0, sigma=1.0, p1=0.5)
RECOVERY_PARAMS = dict(alpha=1.1932, beta=1.8815, theta=2.4340, lam=1.3058, sigma=0.3219, p1=0.9878)


@pytest.fixture(scope="session")
def lung():
    return load_csv("builtin:lung", covariate_cols=["age", "sex"])


@pytest.fixture(scope="session")
def lung_rescaled(lung):
    return rescale_time(lung)


@pytest.fixture(scope="session")
def lung_eephnd_fit(lung_rescaled):
    from eephnd.estimation import fit_mle
    return fit_mle(lung_rescaled.time, "eephnd")


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary."""
    def record(name: str, passed: bool, detail: str = ""):
        _ACCEPTANCE[name] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[0].rstrip("."))):
        passed, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}  {detail}")
