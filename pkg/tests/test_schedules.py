import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vropt.bench_data import toy_classification
from vropt.data import RandomSource
from vropt.objectives import GlmObjective, smoothness
from vropt.schedules import (
    StepsizePolicy,
    armijo_policy,
    default_stepsize,
    fixed_policy,
    lipschitz_scheme,
    minibatch_smoothness,
    sample,
    theory_policy,
    uniform_scheme,
)


def test_scheme_validation():
    uniform_scheme(batch=3)
    with pytest.raises(ValueError):
        uniform_scheme(batch=0)
    with pytest.raises(ValueError):
        lipschitz_scheme([1.0, -1.0])
    with pytest.raises(ValueError):
        lipschitz_scheme([0.0, 0.0])


def test_sample_uniform_batches():
    scheme = uniform_scheme(batch=4)
    rng = RandomSource(0)
    for _ in range(50):
        batch = sample(scheme, rng, 10)
        assert len(batch) == 4
        assert len(set(int(i) for i in batch)) == 4  # without replacement
        assert all(0 <= int(i) < 10 for i in batch)
    with pytest.raises(ValueError):
        sample(uniform_scheme(batch=11), rng, 10)


def test_sample_deterministic():
    s1 = [int(sample(uniform_scheme(), RandomSource(5), 100)[0]) for _ in range(1)]
    s2 = [int(sample(uniform_scheme(), RandomSource(5), 100)[0]) for _ in range(1)]
    assert s1 == s2


def test_lipschitz_sampling_frequencies():
    # one heavy example should dominate the draw
    w = [10.0, 1.0, 1.0]
    scheme = lipschitz_scheme(w)
    rng = RandomSource(1)
    counts = np.zeros(3)
    for _ in range(6000):
        counts[int(sample(scheme, rng, 3)[0])] += 1
    freq = counts / counts.sum()
    assert freq[0] == pytest.approx(10.0 / 12.0, abs=0.02)


def test_policy_validation():
    fixed_policy(0.5)
    theory_policy()
    armijo_policy()
    with pytest.raises(ValueError):
        fixed_policy(0.0)
    with pytest.raises(ValueError):
        StepsizePolicy("fixed")
    with pytest.raises(ValueError):
        StepsizePolicy("adaptive")
    with pytest.raises(ValueError):
        armijo_policy(c=1.5)


def test_minibatch_smoothness_endpoints():
    assert minibatch_smoothness(9.0, 2.0, 12, 1) == 9.0
    assert minibatch_smoothness(9.0, 2.0, 12, 12) == 2.0
    with pytest.raises(ValueError):
        minibatch_smoothness(9.0, 2.0, 12, 0)
    with pytest.raises(ValueError):
        minibatch_smoothness(9.0, 2.0, 12, 13)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 60), st.floats(0.01, 5.0), st.floats(1.0, 30.0))
def test_minibatch_smoothness_monotone(n, l_full, ratio):
    l_max = l_full * ratio
    vals = [minibatch_smoothness(l_max, l_full, n, b) for b in range(1, n + 1)]
    assert all(vals[k + 1] <= vals[k] + 1e-12 * l_max for k in range(n - 1))
    assert all(l_full - 1e-12 * l_max <= v <= l_max + 1e-12 * l_max for v in vals)


def test_default_stepsize_routing():
    ds = toy_classification(seed=2, n=20, d=5)
    obj = GlmObjective(ds, "logistic", l2=0.1)
    info = smoothness(obj)
    assert default_stepsize("sag", info) == pytest.approx(1.0 / info.l_max)
    assert default_stepsize("gd", info) == pytest.approx(1.0 / info.l_full)
    assert default_stepsize("svrg", info, lipschitz_scheme(info.per_example)) \
        == pytest.approx(1.0 / info.l_mean)
    b4 = default_stepsize("saga", info, uniform_scheme(batch=4))
    assert 1.0 / info.l_max < b4 <= 1.0 / info.l_full + 1e-12
    with pytest.raises(ValueError):
        default_stepsize("sgd", info)
    with pytest.raises(ValueError):
        default_stepsize("sdca", info)
