import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from isoscale.synthgen import GeneratorConfig, generate

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def miskey_fixture():
    """500 x 30, three miskeys, every discrimination exactly 2."""
    cfg = GeneratorConfig(n=500, p=30, pathologies={"miskey": 3}, a_mu=float(np.log(2.0)), a_sigma=0.0, seed=11)
    return generate(cfg)


@pytest.fixture(scope="session")
def mixed_fixture():
    cfg = GeneratorConfig(n=400, p=24, pathologies={"miskey": 1, "grading_noise": 1, "ambiguous": 1,
                                                    "off_construct": 1}, seed=5)
    return generate(cfg)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
