import io
import os

import numpy as np
import pytest

from vropt.bench_data import tiny, toy_classification
from vropt.data import Dataset, SparseRow
from vropt.diag import (
    StopRule,
    TraceRecord,
    check_contraction,
    check_lemma1,
    composite_residual,
    dual_objective,
    duality_gap,
    enum_stats,
    enum_stats_batches,
    fd_grad,
    fit_linear_rate,
    golden_section_max,
    read_trace,
    should_stop,
    solve_reference,
    write_trace,
)
from vropt.objectives import GlmObjective, smoothness
from vropt.optimizers import DualState, sdca_step


def _toy(l2=0.1):
    return GlmObjective(toy_classification(seed=0, n=25, d=6), "logistic", l2=l2)


def test_fd_grad_matches_analytic():
    obj = _toy()
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.normal(size=obj.d)
        assert np.allclose(fd_grad(obj, x), obj.full_grad(x), rtol=1e-7, atol=1e-9)
    g0 = fd_grad(obj, np.zeros(obj.d), i=3)
    assert np.allclose(g0, obj.grad_i(np.zeros(obj.d), 3), rtol=1e-7, atol=1e-9)


def test_enum_stats_hand_case():
    # estimator that depends only on i: mean and variance by hand
    obj = GlmObjective(tiny(seed=0), "logistic", l2=0.1)
    vecs = np.zeros((obj.n, obj.d))
    vecs[0, 0] = 3.0
    vecs[1, 0] = -3.0

    mean, var = enum_stats(obj, lambda x, i: vecs[i].copy(), np.zeros(obj.d))
    assert np.allclose(mean, np.zeros(obj.d))
    assert var == pytest.approx(18.0 / obj.n, rel=1e-15)


def test_enum_stats_batches_counts():
    obj = GlmObjective(tiny(seed=0), "logistic", l2=0.1)  # n = 6
    x = np.full(obj.d, 0.3)
    est = lambda xx, i: obj.grad_i(xx, i)
    m1, v1 = enum_stats_batches(obj, est, x, 2)  # C(6,2) = 15 subsets
    assert np.allclose(m1, obj.full_grad(x), rtol=1e-12, atol=1e-14)
    _, v_single = enum_stats(obj, est, x)
    # batch averaging shrinks variance: (n-b)/(b(n-1)) factor for b=2, n=6
    assert v1 == pytest.approx(v_single * 4.0 / 10.0, rel=1e-10)


def test_golden_section_parabola():
    arg = golden_section_max(lambda v: -(v - 1.3) ** 2, -10.0, 10.0, tol=1e-14)
    assert arg == pytest.approx(1.3, abs=1e-7)
    # boundary maximum
    arg = golden_section_max(lambda v: v, 0.0, 2.0, tol=1e-14)
    assert arg == pytest.approx(2.0, abs=1e-6)


def test_solve_reference_analytic():
    # f(x) = 0.5(x-2)^2 + 0.25 x^2 has the stationary point 4/3
    ds = Dataset([SparseRow([0], [1.0], 1)], [2.0])
    obj = GlmObjective(ds, "half_squared", l2=0.5)
    x, f = solve_reference(obj, tol=1e-13, cache=False)
    assert x[0] == pytest.approx(4.0 / 3.0, rel=1e-10)
    assert f == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert composite_residual(obj, x) <= 1e-12


def test_solve_reference_l1_analytic():
    # soft-thresholded stationarity: 1.5x - 2 + 0.4 = 0 on the positive branch
    ds = Dataset([SparseRow([0], [1.0], 1)], [2.0])
    obj = GlmObjective(ds, "half_squared", l2=0.5, l1=0.4)
    x, f = solve_reference(obj, tol=1e-13, cache=False)
    assert x[0] == pytest.approx(1.6 / 1.5, rel=1e-10)
    assert f == pytest.approx(obj.objective_value(x), rel=1e-15)


def test_solve_reference_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("VROPT_CACHE", str(tmp_path))
    obj = _toy()
    x1, f1 = solve_reference(obj, tol=1e-12)
    files = os.listdir(tmp_path)
    assert files
    x2, f2 = solve_reference(obj, tol=1e-12)
    assert np.array_equal(x1, x2) and f1 == f2
    # different l2 keys a different entry
    solve_reference(_toy(l2=0.2), tol=1e-12)
    assert len(os.listdir(tmp_path)) > len(files)


def test_trace_round_trip(tmp_path):
    recs = [
        TraceRecord(epoch=0.0, grad_evals=0, f=0.7, subopt=None, grad_norm=0.1),
        TraceRecord(epoch=1.0, grad_evals=50, f=0.5, subopt=1e-3,
                    grad_norm=None, var_est=2.5, gap=None, time_s=None),
    ]
    p = str(tmp_path / "t.csv")
    write_trace(recs, p, meta={"method": "saga", "gamma": "0.25"})
    back, meta = read_trace(p)
    assert meta == {"method": "saga", "gamma": "0.25"}
    assert len(back) == 2
    assert back[0].subopt is None and back[0].grad_norm == 0.1
    assert back[1].var_est == 2.5 and back[1].grad_evals == 50
    assert back[1].f == 0.5


def test_empty_trace_header_only():
    buf = io.StringIO()
    write_trace([], buf)
    text = buf.getvalue()
    assert text.splitlines() == ["epoch,grad_evals,f,subopt,grad_norm,var_est,gap,time_s"]
    back, meta = read_trace(text)
    assert back == [] and meta == {}


def test_read_trace_rejects_garbage():
    with pytest.raises(ValueError):
        read_trace("epoch,foo\n")
    with pytest.raises(ValueError):
        read_trace("epoch,grad_evals,f,subopt,grad_norm,var_est,gap,time_s\n1,2\n")


def test_fit_linear_rate_planted():
    rho, c = 0.07, 1.3
    recs = [TraceRecord(epoch=float(k), grad_evals=k, f=0.0,
                        subopt=c * (1 - rho) ** k) for k in range(40)]
    fit = fit_linear_rate(recs)
    assert fit.rho_hat == pytest.approx(rho, abs=1e-12)
    assert fit.c_hat == pytest.approx(c, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_linear_rate(recs[:3])
    # floor records are dropped rather than skewing the fit
    floored = recs + [TraceRecord(epoch=99.0, grad_evals=99, f=0.0, subopt=1e-16)]
    fit2 = fit_linear_rate(floored)
    assert fit2.rho_hat == pytest.approx(rho, abs=1e-12)


def test_stop_rules():
    assert StopRule.parse("grad:1e-8").eps == 1e-8
    assert StopRule.parse(None).kind == "epochs"
    assert StopRule.parse("epochs").kind == "epochs"
    for bad in ("grad", "grad:", "loss:1e-3", "gap"):
        with pytest.raises(ValueError):
            StopRule.parse(bad)
    rec = TraceRecord(epoch=1.0, grad_evals=10, f=0.5, grad_norm=1e-9, gap=None)
    assert should_stop("grad:1e-8", rec)
    assert not should_stop("epochs", rec)
    with pytest.raises(ValueError):
        should_stop("gap:1e-8", rec)


def test_duality_helpers():
    obj = _toy(l2=0.3)
    dual = DualState(obj)
    d0 = dual_objective(obj, dual)
    gap0 = duality_gap(obj, dual)
    assert gap0 >= 0.0
    rng = np.random.default_rng(2)
    for _ in range(200):
        sdca_step(dual, obj, int(rng.integers(obj.n)))
    assert dual_objective(obj, dual) >= d0
    assert 0.0 <= duality_gap(obj, dual) < gap0


def test_contraction_refuses_bad_inputs():
    obj = _toy()
    info = smoothness(obj)
    x_star, _ = solve_reference(obj, tol=1e-12, cache=False)
    with pytest.raises(ValueError):
        check_contraction(obj, np.ones(obj.d), x_star, 2.0 / info.l_max)
    free = GlmObjective(toy_classification(seed=0, n=25, d=6), "logistic", l2=0.0)
    with pytest.raises(ValueError):
        check_contraction(free, np.ones(obj.d), x_star, 1e-3)


def test_lemma1_positive_slack_at_random_point():
    obj = _toy()
    x_star, _ = solve_reference(obj, tol=1e-12, cache=False)
    ok, slack = check_lemma1(obj, np.ones(obj.d), x_star)
    assert ok and slack >= -1e-12
