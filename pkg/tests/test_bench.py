import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dctree.bench import PHASES, linear_fit_r2, relative_spread, run_bench, time_phases
from dctree.fixtures import stack_channels, textured
from dctree.pipeline import TreeConfig
from dctree.regions import ExtractParams


def test_relative_spread():
    assert relative_spread([10, 10, 10]) == 0.0
    assert relative_spread([9, 11]) == pytest.approx(0.2)


def test_linear_fit_r2():
    x = np.arange(6)
    assert linear_fit_r2(x, 3 * x + 1) == pytest.approx(1.0)
    assert linear_fit_r2(x, np.full(6, 2.0)) == 1.0
    assert linear_fit_r2([0, 1, 2, 3], [0, 1, 0, 1]) == pytest.approx(0.2)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=10), st.floats(-5, 5), st.floats(-5, 5))
def test_r2_bounds(noise, a, b):
    x = np.arange(len(noise), dtype=float)
    r2 = linear_fit_r2(x, a * x + b + np.array(noise))
    assert r2 <= 1.0 + 1e-9


def test_stack_channels():
    base = textured(16, 16, 3)
    img = stack_channels(base, 7, sigma=2.0, seed=1)
    assert img.shape == (16, 16, 7) and img.depth == "u8"
    diff = img.data[..., 4].astype(int) - base.data[..., 1]
    assert 0.5 < diff.std() < 4
    assert stack_channels(base, 7, sigma=2.0, seed=1) == img


def test_time_phases_positive():
    t = time_phases(textured(16, 16, 2), TreeConfig(), ExtractParams(), loops=2)
    assert set(t) == set(PHASES) and all(v > 0 for v in t.values())


def test_run_bench_report():
    report = run_bench(textured(24, 24, 3), (1, 2, 4, 8), repetitions=3, loops=1)
    assert [r.channels for r in report.rows] == [1, 2, 4, 8]
    for r in report.rows:
        for p in PHASES:
            assert len(r.samples[p]) == 3
            assert r.phases[p].mean_ms == pytest.approx(np.mean(r.samples[p]))
            assert r.phases[p].var_ms == pytest.approx(np.var(r.samples[p]))
            assert r.phases[p].mean_ms >= 0 and r.phases[p].var_ms >= 0
    assert len(report.to_tsv().splitlines()) == 5
    assert report.to_table().startswith("24x24, 3 repetitions")


def test_run_bench_validation():
    base = textured(8, 8, 1)
    with pytest.raises(ValueError):
        run_bench(base, (1,), repetitions=2)
    with pytest.raises(ValueError):
        run_bench(base, (1,), loops=0)
    with pytest.raises(ValueError):
        run_bench(base, (1,), clock="sundial")
