import numpy as np
import pytest

from risfd.channel import ChannelSet, crandn
from risfd.params import SystemParams
from risfd.validate import random_psd, random_state  # noqa: F401  (re-exported for tests)

# lines printed at the end of the session by the acceptance suite
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def random_channels(rng, n_t=2, n_r=2, m=2, si=1.0) -> ChannelSet:
    """Unit-variance channels (no path loss) for small algebraic tests."""
    return ChannelSet(
        H_BI=crandn(rng, (m, n_t)), H_IB=crandn(rng, (n_r, m)),
        h_ID=crandn(rng, m), h_IE=crandn(rng, m), h_BE=crandn(rng, n_t), h_BD=crandn(rng, n_t),
        h_UE=complex(crandn(rng, ())), h_UD=complex(crandn(rng, ())),
        h_UB=crandn(rng, n_r), h_UI=crandn(rng, m), H_BB=np.sqrt(si) * crandn(rng, (n_r, n_t)),
    )


def unit_params(n_t=2, n_r=2, m=2, **kw) -> SystemParams:
    """Parameters on the scale of :func:`random_channels`."""
    base = dict(n_tx=n_t, n_rx=n_r, m_ris=m, p_ul=1.0, p_max=1.0,
                sigma2_b=0.5, sigma2_d=0.5, sigma2_e=0.5, sigma2_si=1.0)
    base.update(kw)
    return SystemParams(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
