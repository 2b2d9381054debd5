import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from jointinv import data, kernels, model  # noqa: E402


@pytest.fixture(params=["python", "compiled"])
def backend(request):
    """Run a test once per convolution backend."""
    if request.param == "compiled" and not kernels.compiled_available():
        pytest.skip("compiled extension not built")
    old = kernels.BACKEND
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(old)


@pytest.fixture
def tiny_cfg():
    return model.ModelConfig(n_blocks=2, channels=3, kernel=(3, 3), dilations=(1, 2), patch_width=3)


@pytest.fixture(scope="session")
def tiny_scenario():
    """Two small related surveys and their datasets, for fast training tests."""
    s1 = data.SyntheticSpec(depth_samples=24, n_traces=30, n_layers=5, seed=11)
    s2 = data.SyntheticSpec(depth_samples=24, n_traces=25, n_layers=5, dip=-0.04, seed=12)
    v1, v2 = data.make_scenario(s1, s2)
    d1 = data.build_dataset(v1.seismic, v1.impedance, data.sample_wells(30, 6), 3)
    d2 = data.build_dataset(v2.seismic, v2.impedance, data.sample_wells(25, 4), 3)
    return v1, v2, d1, d2


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# -- acceptance report ------------------------------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def accept():
    """``accept(n, ok, detail)`` records the verdict for acceptance criterion n."""
    def record(n, ok, detail):
        _ACCEPTANCE[n] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
