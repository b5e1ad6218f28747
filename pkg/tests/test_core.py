import math

import numpy as np
import pytest

from smoo.core import (ConfigurationError, DomainError, SolverConfig, Thresholds,
                       VacuousGuaranteeError, derive_step_size, mu_bound, thin_interval,
                       union_confidence)


def make_cfg(**kw):
    base = dict(d=3, m=1, R=1.0, T=100, theta=1.0, delta=0.01, dual_caps=(2.0,), G=4.0)
    base.update(kw)
    return SolverConfig(**base)


@pytest.mark.parametrize("R, D, T, G, expected", [
    (1.0, 1.0, 2, 1.0, 1 / math.sqrt(2)),
    (1.0, 0.0, 50, 1.0, 0.1),
    (2.0, 3.0, 10_000, 5.0, math.sqrt(13 / 20_000) / 5),
])
def test_step_size_examples(R, D, T, G, expected):
    assert derive_step_size(R, D, T, G) == pytest.approx(expected, rel=1e-14)


def test_step_size_third_example_value():
    assert derive_step_size(2.0, 3.0, 10_000, 5.0) == pytest.approx(0.005099, abs=5e-7)


def test_step_size_scaling_in_T():
    assert derive_step_size(1.3, 0.7, 400, 2.0) / derive_step_size(1.3, 0.7, 100, 2.0) == 0.5


@pytest.mark.parametrize("G, T", [(0.0, 10), (-1.0, 10), (1.0, 0)])
def test_step_size_rejects_bad_inputs(G, T):
    with pytest.raises(ConfigurationError):
        derive_step_size(1.0, 1.0, T, G)


def test_mu_examples():
    assert mu_bound(1.0, 1.0, 1.0, 0.0) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert mu_bound(0.1, 1.0, 1.0, 1.0) == pytest.approx(2 + 4 * math.sqrt(2 * math.log(10)),
                                                         rel=1e-14)
    # the closed form evaluates to 10.58386; the quoted 10.585 is a rounded figure
    assert mu_bound(0.1, 1.0, 1.0, 1.0) == pytest.approx(10.585, abs=1.5e-3)


def test_mu_homogeneous_and_monotone():
    base = mu_bound(0.05, 1.7, 1.0, 2.0)
    assert mu_bound(0.05, 3.4, 1.0, 2.0) == pytest.approx(2 * base, rel=1e-14)
    assert mu_bound(0.01, 1.7, 1.0, 2.0) > base > mu_bound(0.2, 1.7, 1.0, 2.0)
    assert mu_bound(0.05, 1.7, 1.5, 2.0) > base
    assert mu_bound(0.05, 1.7, 1.0, 2.5) > base


@pytest.mark.parametrize("delta", [0.0, -0.1, 1.5])
def test_mu_domain(delta):
    with pytest.raises(DomainError):
        mu_bound(delta, 1.0, 1.0, 1.0)


def test_config_derived_constants():
    cfg = make_cfg(m=2, dual_caps=(1.5, 2.0))
    assert cfg.D2 == pytest.approx(1.5 ** 2 + 2.0 ** 2)
    assert cfg.eta == pytest.approx(math.sqrt((1 + cfg.D2) / 200) / 4.0)
    assert cfg.mu == pytest.approx(mu_bound(0.01, 4.0, 1.0, math.sqrt(cfg.D2)))
    assert cfg.confidence == pytest.approx(1 - 5 * 0.01)
    assert union_confidence(3, 0.01) == pytest.approx(0.93)


@pytest.mark.parametrize("kw", [
    dict(theta=0.0), dict(T=0), dict(T=2.5), dict(delta=0.0), dict(delta=1.0),
    dict(dual_caps=(0.0,)), dict(dual_caps=(1.0, 2.0)), dict(G=0.0), dict(R=0.0), dict(d=0),
])
def test_config_rejects(kw):
    with pytest.raises(ConfigurationError):
        make_cfg(**kw)


def test_config_rejects_vacuous_delta():
    with pytest.raises(VacuousGuaranteeError):
        make_cfg(m=2, dual_caps=(1.0, 1.0), delta=0.2)
    make_cfg(m=2, dual_caps=(1.0, 1.0), delta=0.19)


def test_config_is_immutable():
    cfg = make_cfg()
    with pytest.raises(Exception):
        cfg.T = 5


def test_thresholds_tighten_exact():
    th = Thresholds.tighten([0.5, -1.0], mu=3.0, theta=2.0, T=400)
    np.testing.assert_allclose(th.tightened, np.array([0.5, -1.0]) - 3.0 / (2.0 * 20.0),
                               rtol=0, atol=1e-15)
    np.testing.assert_array_equal(th.active, th.tightened)
    assert Thresholds(np.zeros(2)).active is not None


def test_thin_interval():
    assert thin_interval(1) == 1
    assert thin_interval(1000) == 1
    assert thin_interval(1001) == 2
    assert thin_interval(10 ** 6) == 1000
