import numpy as np
import pytest

from fidsid.core import Role, validate_feature_set
from fidsid.embed import encode_p6


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def features(data, role=Role.REFERENCE):
    return validate_feature_set(np.asarray(data, dtype=float), role)


def write_images(directory, images):
    directory.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(images):
        (directory / f"img_{i:04d}.ppm").write_bytes(encode_p6(img))
    return directory


def uniform_images(n, seed, size=16):
    """Low-diversity set: each image one flat color near mid-gray."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        color = rng.integers(110, 146, size=3, dtype=np.uint8)
        out.append(np.broadcast_to(color, (size, size, 3)).copy())
    return out


def varied_images(n, seed, size=16):
    """High-diversity set: random colors per 4x4 block plus pixel noise."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        blocks = rng.integers(0, 256, size=(4, 4, 3))
        img = np.kron(blocks, np.ones((size // 4, size // 4, 1)))
        img = img + rng.integers(-20, 21, size=img.shape)
        out.append(np.clip(img, 0, 255).astype(np.uint8))
    return out


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; printed in the terminal summary."""
    state = {"detail": ""}

    def note(detail):
        state["detail"] = detail

    yield note
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    _ACCEPTANCE.append((request.node.name, passed, state["detail"]))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
