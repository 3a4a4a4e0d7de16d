import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from wsoleval import _kernels, _pykernels  # noqa: E402

BACKENDS = ["python"]
try:
    from wsoleval import _ckernels  # noqa: E402
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS.insert(0, "cython")

_MODULES = {"python": _pykernels, "cython": _ckernels}


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = _MODULES[request.param]
    for name in ("label_components", "sweep_best_iou", "felzenszwalb_merge"):
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return request.param


_ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if not item.nodeid.startswith("tests/test_acceptance.py::test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        title = (item.obj.__doc__ or item.name).strip().splitlines()[0]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _ACCEPTANCE[item.name] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: [int(t) if t.isdigit() else t for t in n.split("_")]):
        status, title = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{status}  {name}: {title}")
