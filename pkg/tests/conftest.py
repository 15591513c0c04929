import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def price_csv(prices, start="2020-01-01") -> str:
    days = np.datetime64(start) + np.arange(len(prices))
    return "date,price\n" + "".join(f"{d},{float(p)!r}\n" for d, p in zip(days, prices))


@pytest.fixture
def garch_prices_csv(tmp_path):
    """A 1500-row price file driven by a GARCH(1,1) return path."""
    from ndcrisk import GarchParams, simulate_garch

    r, _ = simulate_garch(GarchParams(2e-7, 0.08, 0.90), 1500, seed=7)
    p = 100.0 * np.exp(np.cumsum(np.r_[0.0, r.returns]))
    path = tmp_path / "prices.csv"
    path.write_text(price_csv(p))
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
