import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litfit2d.errors import ParameterError
from litfit2d.poles import (
    ClusterSpec,
    clustered_samples,
    materialize_poles,
    tapered_offsets,
    uniform_offsets,
)

TWO_PI = 2.0 * np.pi


def test_tapered_single_level_is_one():
    assert tapered_offsets(1, TWO_PI).tolist() == [1.0]


def test_tapered_four_levels_closed_form():
    e = tapered_offsets(4, TWO_PI)
    # exp(-2*pi*(2 - sqrt(j))) for j = 1..4
    assert e[0] == pytest.approx(1.8674427317079888e-3, rel=1e-15)
    assert e[1] == pytest.approx(np.exp(-TWO_PI * (2 - np.sqrt(2.0))), rel=1e-15)
    assert e[2] == pytest.approx(np.exp(-TWO_PI * (2 - np.sqrt(3.0))), rel=1e-15)
    assert e[3] == 1.0


def test_uniform_offsets_values():
    assert uniform_offsets(1, TWO_PI).tolist() == [1.0]
    e = uniform_offsets(2, TWO_PI)
    assert e[0] == 1.0
    assert e[1] == pytest.approx(np.exp(-TWO_PI / np.sqrt(2.0)), rel=1e-15)


def test_uniform_constant_ratio():
    e = uniform_offsets(17, 3.0)
    ratios = e[1:] / e[:-1]
    assert np.allclose(ratios, np.exp(-3.0 / np.sqrt(17.0)), rtol=1e-13)


@pytest.mark.parametrize("sigma", [1.0, TWO_PI, 10.0])
def test_offset_invariants_full_range(sigma):
    # positive, sorted, extreme element exactly 1 for every n up to 500
    for n in range(1, 501):
        e = tapered_offsets(n, sigma)
        assert e[-1] == 1.0
        assert np.all(e > 0)
        assert np.all(np.diff(e) > 0) or n == 1
        u = uniform_offsets(n, sigma)
        assert u[0] == 1.0
        assert np.all(u > 0)
        assert np.all(np.diff(u) < 0) or n == 1


@pytest.mark.parametrize("bad", [dict(n_levels=0), dict(sigma=0.0),
                                 dict(sigma=-2.0), dict(side_scale=0.0)])
def test_cluster_spec_rejects_bad_parameters(bad):
    kwargs = dict(location=0.0, n_levels=3, sigma=1.0)
    kwargs.update(bad)
    with pytest.raises(ParameterError):
        ClusterSpec(**kwargs)


def test_offsets_reject_bad_parameters():
    with pytest.raises(ParameterError):
        tapered_offsets(0, 1.0)
    with pytest.raises(ParameterError):
        tapered_offsets(4, 0.0)
    with pytest.raises(ParameterError):
        uniform_offsets(0, 1.0)


def test_materialize_single_pair():
    ps = materialize_poles(ClusterSpec(location=0.0, n_levels=1, sigma=TWO_PI))
    assert sorted(ps.offsets.tolist(), key=lambda z: z.imag) == [-1j, 1j]


def test_materialize_closed_under_conjugation():
    ps = materialize_poles(ClusterSpec(location=0.3, n_levels=2, sigma=TWO_PI))
    assert len(ps) == 4
    offsets = set(ps.offsets.tolist())
    assert {z.conjugate() for z in offsets} == offsets
    assert all(z.imag != 0 for z in ps.offsets)
    assert all(z != 0 for z in ps.offsets)


def test_materialize_real_oneside():
    ps = materialize_poles(ClusterSpec(location=0.0, n_levels=3, sigma=TWO_PI,
                                       orientation="real_oneside"))
    assert len(ps) == 3
    assert np.all(ps.offsets.real < 0)
    assert np.all(ps.offsets.imag == 0)
    assert np.abs(ps.offsets).max() == 1.0


def test_materialize_side_scale():
    ps = materialize_poles(ClusterSpec(location=0.0, n_levels=2, sigma=TWO_PI,
                                       side_scale=0.25))
    assert np.abs(ps.offsets).max() == 0.25


def test_clustered_samples_endpoints():
    assert clustered_samples(2, 16).tolist() == [1e-16, 1.0]
    s = clustered_samples(3, 16)
    assert np.allclose(s, [1e-16, 1e-8, 1.0], rtol=1e-15)


def test_clustered_samples_f2_count():
    s = clustered_samples(450, 16)
    assert len(s) == 450
    assert s[0] == 1e-16 and s[-1] == 1.0
    ratios = s[1:] / s[:-1]
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


def test_clustered_samples_rejects_small_m():
    with pytest.raises(ParameterError):
        clustered_samples(1)


@given(n=st.integers(1, 200),
       sigma=st.floats(0.1, 20.0, allow_nan=False))
@settings(max_examples=60, deadline=None)
def test_tapered_property(n, sigma):
    e = tapered_offsets(n, sigma)
    assert e.shape == (n,)
    assert e[-1] == 1.0
    assert np.all(e > 0) and np.all(e <= 1.0)
    assert np.all(np.diff(e) > 0) or n == 1
