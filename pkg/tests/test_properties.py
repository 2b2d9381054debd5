"""Property-based checks on small random inputs."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from jointinv import autograd as ag
from jointinv import kernels
from jointinv.autograd import Graph, Tensor
from jointinv.data import SectionGrid, extract_patch, grid_from_bytes, grid_to_bytes, sample_wells
from jointinv.evaluation import r2

from oracles import conv2d_naive

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.integers(1, 12), w=st.integers(1, 6),
       kh=st.integers(1, 5), kw=st.integers(1, 3), dh=st.sampled_from([1, 2, 4, 8]), dw=st.sampled_from([1, 2]))
def test_conv_matches_oracle(seed, h, w, kh, kw, dh, dw):
    r = np.random.default_rng(seed)
    x = r.normal(size=(2, h, w))
    k = r.normal(size=(3, 2, kh, kw))
    b = r.normal(size=3)
    out = kernels.conv2d_forward(x[None], k, b, (dh, dw))[0]
    assert np.max(np.abs(out - conv2d_naive(x, k, b, (dh, dw)))) < 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), h=st.integers(1, 10), w=st.integers(1, 5), c=st.floats(-3, 3))
def test_conv_is_linear_in_input(seed, h, w, c):
    r = np.random.default_rng(seed)
    x1, x2 = r.normal(size=(2, 1, h, w)), r.normal(size=(2, 1, h, w))
    k = r.normal(size=(2, 1, 3, 3))
    z = np.zeros(2)
    lhs = kernels.conv2d_forward(x1 + c * x2, k, z, (2, 1))
    rhs = kernels.conv2d_forward(x1, k, z, (2, 1)) + c * kernels.conv2d_forward(x2, k, z, (2, 1))
    assert np.allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(vals=st.lists(finite, min_size=1, max_size=30))
def test_sse_gradient_closed_form(vals):
    a = Tensor(np.array(vals), requires_grad=True)
    b = Tensor(np.zeros(len(vals)))
    with Graph():
        ag.backward(ag.sse(a, b))
    assert np.array_equal(a.grad, 2 * np.array(vals))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 500), data=st.data())
def test_sample_wells_properties(n, data):
    k = data.draw(st.integers(1, n))
    w = sample_wells(n, k)
    assert len(w) == k and w.min() >= 0 and w.max() < n
    assert np.all(np.diff(w) > 0)
    if k > 1:
        assert w[0] == 0 and w[-1] == n - 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 8), n=st.integers(1, 12), m=st.sampled_from([1, 3, 5, 7]))
def test_patch_centre_is_well_trace(seed, d, n, m):
    grid = SectionGrid(np.random.default_rng(seed).normal(size=(d, n)))
    for well in range(n):
        p = extract_patch(grid, well, m)
        assert p.shape == (1, d, m)
        np.testing.assert_array_equal(p[0, :, (m - 1) // 2], grid.values[:, well])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(1, 9), n=st.integers(1, 9),
       dz=st.floats(1e-3, 1e3, allow_nan=False))
def test_grid_bytes_roundtrip(seed, d, n, dz):
    g = SectionGrid(np.random.default_rng(seed).normal(size=(d, n)), dz)
    buf = grid_to_bytes(g)
    back = grid_from_bytes(buf)
    assert np.array_equal(back.values, g.values) and grid_to_bytes(back) == buf


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 40))
def test_r2_at_most_one(seed, n):
    r = np.random.default_rng(seed)
    y = r.normal(size=n)
    assert r2(y, y + r.normal(size=n)) <= 1.0
    assert r2(y, y) == 1.0
