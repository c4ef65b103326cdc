import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gfwave.genfunc import callable_net, constant_net
from gfwave.transform import WaveProblem

settings.register_profile("gfwave", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gfwave")


def random_spd(rng, n, cond_max=1e6):
    """Random SPD matrix with condition number at most ``cond_max``."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    cond = 10.0 ** rng.uniform(0.0, np.log10(cond_max))
    lam = np.exp(rng.uniform(0.0, 1.0, n) * np.log(cond))
    lam[0], lam[-1] = 1.0, cond
    return (q * lam) @ q.T


def zeros(n, shape=()):
    return constant_net(np.zeros(shape) if shape else 0.0, n)


def dalembert_problem():
    """u_tt = u_xx on the unit circle, u0 = sin(2 pi x), u1 = 0."""
    u0 = callable_net(lambda t, x: np.sin(2 * np.pi * x[:, 0]), 1, t_independent=True)
    return WaveProblem(1, constant_net([[1.0]], 1), zeros(1, (1,)), zeros(1), zeros(1, (1,)), zeros(1),
                       zeros(1), u0, zeros(1), [[0.0, 1.0]], 1.0)


def dalembert_exact(t, x):
    x = np.asarray(x).reshape(-1, 1)[:, 0]
    return 0.5 * (np.sin(2 * np.pi * (x - t)) + np.sin(2 * np.pi * (x + t)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def record_criterion(number, title, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} | {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
