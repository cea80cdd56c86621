import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.stats import norm

from svpath import kernel
from svpath.model import ModelParams

BASE = ModelParams(r=0.04, mu=0.1, xi=0.5, rho=0.3)
GENERAL = ModelParams(r=0.03, mu=-0.8, xi=0.4, rho=-0.5, lam=0.05, alpha=0.5)


def test_log_normalization_constants_cancel():
    p = ModelParams(xi=1.0 / (2.0 * math.pi), rho=0.0, alpha=1.0)
    assert abs(kernel.log_normalization(1.0, 0.0, p)) < 1e-15


def test_log_normalization_independent_of_y_at_half():
    p = ModelParams(xi=0.5, rho=0.3, alpha=0.5)
    vals = kernel.log_normalization(0.01, np.array([-5.0, 0.0, 3.0]), p)
    assert np.ptp(vals) == 0.0


def test_log_normalization_matches_product_form():
    p = ModelParams(xi=0.5, rho=0.3)
    y, eps = math.log(0.09), 0.01
    # N = e^{y(1/2-alpha)} / (2 pi eps xi sqrt(1-rho^2)), evaluated as a plain quotient
    n_eps = math.exp(y * (0.5 - 1.0)) / (2 * math.pi * eps * 0.5 * math.sqrt(1 - 0.3**2))
    assert math.isclose(kernel.log_normalization(eps, y, p), math.log(n_eps), rel_tol=1e-13)


def test_log_normalization_rejects_nonpositive_eps():
    with pytest.raises(ValueError):
        kernel.log_normalization(0.0, 0.0, BASE)


@pytest.mark.parametrize("params", [BASE, GENERAL])
def test_lagrangian_vanishes_at_minimisers(params):
    y, eps = math.log(0.09), 0.02
    dy = eps * kernel.variance_drift(y, params)
    dx = eps * kernel.price_drift(y, params)
    l_xy, l_y = kernel.lagrangian(dx, dy, y, eps, params)
    assert abs(l_xy) < 1e-12 and abs(l_y) < 1e-12


def test_lagrangian_without_correlation_is_price_term_only():
    p = BASE.replace(rho=0.0)
    dx, dy, y, eps = 0.03, -0.02, math.log(0.2), 0.01
    l_xy, _ = kernel.lagrangian(dx, dy, y, eps, p)
    expected = -math.exp(-y) / 2 * (dx / eps - (p.r - 0.5 * math.exp(y))) ** 2
    assert math.isclose(l_xy, expected, rel_tol=1e-13)


params_strategy = st.builds(
    ModelParams,
    r=st.floats(-0.05, 0.2),
    mu=st.floats(-2.0, 2.0),
    xi=st.floats(0.01, 2.0),
    rho=st.floats(-0.95, 0.95),
    lam=st.floats(0.0, 0.5),
    alpha=st.sampled_from([0.5, 0.75, 1.0, 1.5]),
)


@settings(max_examples=300, deadline=None)
@given(
    params=params_strategy,
    dx=st.floats(-1.0, 1.0),
    dy=st.floats(-1.0, 1.0),
    y=st.floats(-5.0, 1.0),
    eps=st.floats(1e-4, 0.5),
)
def test_completed_square_matches_direct_form(params, dx, dy, y, eps):
    l_xy, l_y = kernel.lagrangian(dx, dy, y, eps, params)
    direct = kernel.lagrangian_direct(dx, dy, y, eps, params)
    assert l_xy <= 0 and l_y <= 0
    # scale: magnitude of the individual quadratic terms before cancellation
    scale = abs(l_xy) + abs(l_y) + 1e-300
    assert abs((l_xy + l_y) - direct) <= 1e-12 * scale


@pytest.mark.parametrize("params", [BASE, GENERAL])
def test_propagator_integrates_to_one(params):
    x0, y0, eps = 0.0, math.log(0.09), 0.01
    sx = math.exp(y0 / 2) * math.sqrt(eps)
    sy = kernel.variance_diffusion(y0, params) * math.sqrt(eps)
    mx = x0 + eps * kernel.price_drift(y0, params)
    my = y0 + eps * kernel.variance_drift(y0, params)
    xs = np.linspace(mx - 10 * sx, mx + 10 * sx, 401)
    ys = np.linspace(my - 10 * sy, my + 10 * sy, 401)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dens = np.exp(kernel.log_propagator(x0, y0, X, Y, eps, params))
    mass = trapezoid(trapezoid(dens, ys, axis=1), xs)
    assert abs(mass - 1.0) < 1e-3


@settings(max_examples=100, deadline=None)
@given(params=params_strategy, dx=st.floats(-0.5, 0.5), dy=st.floats(-0.5, 0.5),
       y=st.floats(-4.0, 0.5), eps=st.floats(1e-3, 0.2))
def test_propagator_factorises(params, dx, dy, y, eps):
    total = kernel.log_propagator(0.3, y, 0.3 + dx, y + dy, eps, params)
    ylaw = kernel.variance_step(y, eps, params)
    xlaw = kernel.conditional_price_step(0.3, y, dy, eps, params)
    split = norm.logpdf(y + dy, ylaw.mean, ylaw.std) + norm.logpdf(0.3 + dx, xlaw.mean, xlaw.std)
    assert math.isclose(total, split, rel_tol=1e-9, abs_tol=1e-9)


def test_conditional_step_decorrelated_case():
    p = BASE.replace(rho=0.0)
    y, eps = math.log(0.04), 0.01
    law = kernel.conditional_price_step(1.0, y, 0.37, eps, p)
    assert math.isclose(law.mean, 1.0 + eps * (p.r - 0.5 * 0.04))
    assert math.isclose(law.std, 0.2 * math.sqrt(eps))


def test_conditional_step_at_mean_variance_move():
    y, eps = math.log(0.04), 0.01
    law = kernel.conditional_price_step(0.0, y, eps * BASE.log_variance_drift, eps, BASE)
    assert math.isclose(law.mean, eps * (BASE.r - 0.02), rel_tol=1e-12)


@pytest.mark.parametrize("rho", [-0.6, 0.3])
def test_conditional_step_reproduces_correlation(rho):
    p = BASE.replace(rho=rho)
    rng = np.random.default_rng(11)
    y, eps, n = math.log(0.09), 0.01, 100_000
    ylaw = kernel.variance_step(y, eps, p)
    dy = ylaw.mean - y + ylaw.std * rng.standard_normal(n)
    xlaw = kernel.conditional_price_step(0.0, y, dy, eps, p)
    dx = xlaw.mean + xlaw.std * rng.standard_normal(n)
    corr = np.corrcoef(dx, dy)[0, 1]
    se = (1 - rho**2) / math.sqrt(n)
    assert abs(corr - rho) < 3 * se
    # marginal price variance is V eps, independent of rho
    assert abs(dx.var() / (0.09 * eps) - 1.0) < 3 * math.sqrt(2.0 / n)


def _expect_one_step(f, x0, y0, eps, params, width=10.0, points=241):
    sx = math.exp(y0 / 2) * math.sqrt(eps)
    sy = kernel.variance_diffusion(y0, params) * math.sqrt(eps)
    xs = np.linspace(x0 - width * sx, x0 + width * sx, points)
    ys = np.linspace(y0 - width * sy, y0 + width * sy, points)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dens = np.exp(kernel.log_propagator(x0, y0, X, Y, eps, params))
    return trapezoid(trapezoid(dens * f(X, Y), ys, axis=1), xs)


def _smooth(x, y):
    return np.sin(3 * x) + np.cos(2 * y) + x * y


@pytest.mark.parametrize("params", [BASE, GENERAL])
def test_step_generator_matches_hamiltonian(params):
    x0, y0 = 0.2, math.log(0.09)
    target = -kernel.hamiltonian_apply(_smooth, x0, y0, params)
    errs = []
    for eps in (4e-3, 2e-3):
        rate = (_expect_one_step(_smooth, x0, y0, eps, params) - _smooth(x0, y0)) / eps
        errs.append(abs(rate - target))
    assert errs[0] < 10 * 4e-3 * (1 + abs(target))
    # first order in eps
    assert 0.3 < errs[1] / errs[0] < 0.7


def _gauss_step_nodes(x, y, eps, params, nodes):
    """Next-state quadrature nodes for one step from every (x, y).

    Trailing axes: (-2) variance node, (-1) price node.
    """
    z, w = nodes
    ylaw = kernel.variance_step(y[..., None], eps, params)
    y_next = (ylaw.mean + ylaw.std * z)[..., :, None]
    xlaw = kernel.conditional_price_step(x[..., None, None], y[..., None, None],
                                         y_next - y[..., None, None], eps, params)
    x_next = xlaw.mean + xlaw.std * z
    return x_next, np.broadcast_to(y_next, x_next.shape), w[:, None] * w[None, :]


def _hermite(k=24):
    z, w = np.polynomial.hermite_e.hermegauss(k)
    return z, w / w.sum()


def _one_step_mean(f, x, y, eps, params, nodes):
    xn, yn, w = _gauss_step_nodes(np.asarray(x, float), np.asarray(y, float), eps, params, nodes)
    return np.sum(f(xn, yn) * w, axis=(-2, -1))


def test_chapman_kolmogorov_second_order():
    params, nodes = GENERAL, _hermite()
    x0, y0 = np.array(0.1), np.array(math.log(0.09))
    f = lambda x, y: np.exp(-(x - 0.05) ** 2) * np.cos(y + 2.0)
    gaps = []
    for eps in (0.04, 0.02):
        direct = _one_step_mean(f, x0, y0, eps, params, nodes)
        xm, ym, wm = _gauss_step_nodes(x0, y0, eps / 2, params, nodes)
        inner = _one_step_mean(f, xm, ym, eps / 2, params, nodes)
        composed = np.sum(inner * wm)
        gaps.append(abs(composed - direct))
    assert gaps[0] < 0.05 * 0.04
    assert 2.5 < gaps[0] / gaps[1] < 6.0
