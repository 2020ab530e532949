import numpy as np
import pytest

from qutritsim.decay_fit import (
    echo_decay_trace,
    fit_echo_decay,
    fit_recovery,
    inversion_recovery_trace,
)
from qutritsim.pulse_engine import RelaxationParams

RELAX = RelaxationParams(10700.0, 9.4)


def test_noiseless_echo_is_exponential():
    taus = np.linspace(0.0, 20.0, 11)
    amp = echo_decay_trace(taus, RELAX)
    assert amp[0] == pytest.approx(1.0)
    assert np.allclose(amp, np.exp(-2 * taus / 9.4))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_echo_fit_recovers_t2(seed):
    taus = np.linspace(0.0, 15.0, 40)
    t2, _ = fit_echo_decay(taus, echo_decay_trace(taus, RELAX, noise=0.005, seed=seed))
    assert t2 == pytest.approx(9.4, rel=0.02)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_recovery_fit_recovers_t1(seed):
    times = np.linspace(0.0, 40000.0, 40)
    t1, a, c = fit_recovery(times, inversion_recovery_trace(times, RELAX, noise=0.005, seed=seed))
    assert t1 == pytest.approx(10700.0, rel=0.02)
    assert c == pytest.approx(0.0, abs=0.01)
