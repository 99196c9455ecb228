"""Exit criteria for the package, one test per criterion."""

import io as stdio
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fidsid import fid, io, linalg, sid
from fidsid.cli import main
from fidsid.core import FidConfig, GaussianSummary, Role, SidConfig
from fidsid.synth import (GaussianSpec, brute_trace_sqrt_product, closed_form_fid,
                          random_spd, sample_gaussian)

from conftest import features, uniform_images, varied_images, write_images

DATA = Path(__file__).parent / "data"

TABLE1 = [
    ("Pix2Pix after 1 epoch", "381.7384 13132.2067 397.3368 13128.3172 232.7371 6025.8421"),
    ("Pix2Pix after 8 epochs", "252.3915 600.9891 397.3740 13159.2410 205.0118 2845.2790"),
    ("Pix2Pix after 100 epochs", "162.1522 120.5520 174.4255 4420.7079 213.1165 3184.3623"),
    ("CycleGAN after 1 epoch", "347.3554 13671.4148 229.4415 5805.8483 299.1129 11242.5304"),
    ("CycleGAN after 8 epochs", "316.4288 14782.1975 227.7994 8667.2221 253.0294 9316.9300"),
]


def cli(*argv):
    out, err = stdio.StringIO(), stdio.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def cli_process(*argv):
    proc = subprocess.run([sys.executable, "-m", "fidsid", *map(str, argv)],
                          capture_output=True, check=False)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def gaussian_fixtures(tmp_path_factory):
    wide = sample_gaussian(GaussianSpec.isotropic(8, 2.0, 4000, seed=1))
    narrow = sample_gaussian(GaussianSpec.isotropic(8, 1.0, 4000, seed=2))
    twin = sample_gaussian(GaussianSpec.isotropic(8, 1.0, 4000, seed=3))
    d = tmp_path_factory.mktemp("gauss")
    io.write_features(wide, d / "wide.fds")
    io.write_features(narrow, d / "narrow.fds")
    return wide, narrow, twin, d


def test_ac1_table1_rendered_verbatim(criterion):
    code, out, _ = cli("report", "--manifest", DATA / "table1.yaml")
    assert code == 0
    body = out.splitlines()[2:]
    assert len(body) == len(TABLE1)
    for line, (label, cells) in zip(body, TABLE1):
        assert line.startswith(label)
        assert line.split()[-6:] == cells.split()
    criterion("30 published cells re-rendered through the report command")


def test_ac2_trace_oracle(criterion):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst, pairs = 0.0, 0
    for k in range(140):
        d = 2 + k % 7
        a, b = random_spd(d, rng), random_spd(d, rng)
        for m in (a, b):
            w = np.linalg.eigvalsh(m)
            assert w[-1] / w[0] <= 1e6 * (1 + 1e-9)
        fast, slow = linalg.trace_sqrt_product(a, b), brute_trace_sqrt_product(a, b)
        worst = max(worst, abs(fast - slow) / abs(slow))
        pairs += 1
    elapsed = time.perf_counter() - start
    criterion(f"{pairs} pairs, max rel err {worst:.2e} (tol 1e-8), {elapsed:.2f}s (budget 5s)")
    assert worst <= 1e-8
    assert elapsed < 5


def test_ac3_closed_form_fid(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        d = int(rng.integers(1, 33))
        mr, mg = rng.normal(size=d) * 3, rng.normal(size=d) * 3
        sr, sg = rng.uniform(0.1, 5, size=2)
        got = fid.fid_score(GaussianSummary(mr, sr**2 * np.eye(d), 10),
                            GaussianSummary(mg, sg**2 * np.eye(d), 10), FidConfig(eps=0.0)).value
        want = float((mr - mg) @ (mr - mg) + d * (sr - sg) ** 2)
        worst = max(worst, abs(got - want) / want)
    assert worst <= 1e-10

    shift = np.zeros(16)
    shift[0] = 3.0
    sampled = [
        (GaussianSpec.isotropic(16, 1.0, 20_000, seed=10),
         GaussianSpec.isotropic(16, 1.0, 20_000, seed=11, mean=shift)),
        (GaussianSpec.isotropic(8, 2.0, 20_000, seed=12), GaussianSpec.isotropic(8, 1.0, 20_000, seed=13)),
        (GaussianSpec(np.zeros(4), np.array([1.0, 2.0, 0.5, 1.0]), 20_000, seed=14),
         GaussianSpec(np.ones(4), np.array([2.0, 1.0, 1.5, 1.0]), 20_000, seed=15)),
    ]
    rels = []
    for a, b in sampled:
        got = fid.fid_from_features(sample_gaussian(a), sample_gaussian(b, Role.GENERATED)).value
        rels.append(abs(got - closed_form_fid(a, b)) / closed_form_fid(a, b))
    elapsed = time.perf_counter() - start
    criterion(f"analytic max rel {worst:.1e} (tol 1e-10); sampled rel errs "
              f"{', '.join(f'{r:.2%}' for r in rels)} (tol 5%); {elapsed:.1f}s (budget 60s)")
    assert max(rels) <= 0.05
    assert elapsed < 60


def test_ac4_fid_contracts(criterion):
    rng = np.random.default_rng(4)
    sym_worst = trans_worst = 0.0
    for case in range(60):
        n, d = int(rng.integers(10, 400)), int(rng.integers(1, 24))
        x = rng.normal(size=(n, d)) * rng.uniform(0.1, 10) + rng.normal(size=d)
        y = rng.normal(size=(int(rng.integers(10, 400)), d)) * rng.uniform(0.1, 10)
        fx, fy = features(x), features(y, Role.GENERATED)
        ab = fid.fid_from_features(fx, fy).value
        ba = fid.fid_from_features(fy.with_role(Role.REFERENCE), fx.with_role(Role.GENERATED)).value
        sym_worst = max(sym_worst, abs(ab - ba) / ab)
        assert fid.fid_from_features(fx, fx.with_role(Role.GENERATED)).value == 0.0
        v = rng.normal(size=d) * rng.uniform(0.5, 10)
        moved = fid.fid_from_features(fx, features(x + v, Role.GENERATED)).value
        trans_worst = max(trans_worst, abs(moved - v @ v) / (v @ v))
    criterion(f"60 cases: symmetry rel {sym_worst:.1e}, FID(X,X)=0 exact, "
              f"translation rel {trans_worst:.1e} (tol 1e-9)")
    assert sym_worst <= 1e-9
    assert trans_worst <= 1e-9


def test_ac5_sid_contracts(criterion, gaussian_fixtures):
    wide, narrow, twin, _ = gaussian_fixtures
    start = time.perf_counter()
    cfg = SidConfig(seed=42)
    zero = sid.sid_diagnostics(narrow, narrow.with_role(Role.GENERATED), cfg)
    assert zero.score.value == 0.0 and set(zero.partials) == {0.0}
    pos = sid.sid_diagnostics(wide, narrow.with_role(Role.GENERATED), cfg)
    neg = sid.sid_score(narrow, wide.with_role(Role.GENERATED), cfg).value
    equal = sid.sid_score(twin, narrow.with_role(Role.GENERATED), cfg).value
    elapsed = time.perf_counter() - start
    criterion(f"identical 0.0; sigma2-vs-1 {pos.score.value:.4f} (partials min "
              f"{min(pos.partials):.4f}); swapped {neg:.4f}; equal {equal:.4f}; {elapsed:.1f}s")
    assert pos.score.value > 0 and all(p > 0 for p in pos.partials)
    assert neg < 0
    assert abs(equal) * 10 <= pos.score.value
    assert elapsed < 120


def test_ac6_cli_determinism(criterion, gaussian_fixtures, tmp_path):
    *_, d = gaussian_fixtures
    ref, gen = d / "wide.fds", d / "narrow.fds"
    outputs = {}
    for cmd in (["fid"], ["fid", "--json"], ["sid", "--seed", "42"], ["sid", "--seed", "42", "--json"]):
        runs = [cli_process(*cmd, "--ref", ref, "--gen", gen, "--threads", t) for t in (1, 4, 1)]
        assert all(r[0] == 0 for r in runs)
        assert runs[0] == runs[1] == runs[2]
        outputs[" ".join(cmd)] = runs[0][1].decode().splitlines()[0]
    criterion("byte-identical over repeats and --threads 1/4: "
              + "; ".join(f"{k} -> {v}" for k, v in outputs.items() if "json" not in k))


def test_ac7_format_robustness(criterion, tmp_path, rng):
    fs = features(rng.normal(size=(25, 7)) * 1e5)
    io.write_features(fs, tmp_path / "rt.fds")
    assert io.read_features(tmp_path / "rt.fds").data.tobytes() == fs.data.tobytes()

    good = tmp_path / "good.fds"
    io.write_features(features(rng.normal(size=(10, 4))), good)
    bad_magic = tmp_path / "bad_magic.fds"
    bad_magic.write_bytes(b"XXXX" + good.read_bytes()[4:])
    truncated = tmp_path / "truncated.fds"
    truncated.write_bytes(good.read_bytes()[:-8])
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2,3,4\n5,6,7,8\n9,10\n")
    images = write_images(tmp_path / "imgs", uniform_images(3, seed=1))
    (images / "img_0001.ppm").write_bytes(b"P6\n16 16\n255\n" + bytes(100))

    cases = [
        (("fid", "--ref", bad_magic, "--gen", good), "bad_magic.fds"),
        (("sid", "--ref", good, "--gen", truncated), "truncated.fds"),
        (("fid", "--ref", ragged, "--gen", good), "row 2"),
        (("embed", "--input", images, "--output", tmp_path / "o.fds"), "img_0001.ppm"),
    ]
    for argv, needle in cases:
        code, out, err = cli_process(*argv)
        assert code == 2, (argv, err)
        assert needle in err.decode()
        assert b"Traceback" not in err
    criterion("64-bit round trip bitwise; bad magic / truncation / ragged CSV / corrupt P6 "
              "-> exit 2 naming the file or row")


def test_ac8_end_to_end_images(criterion, tmp_path):
    start = time.perf_counter()
    diverse = write_images(tmp_path / "diverse", varied_images(200, seed=2))
    plain = write_images(tmp_path / "plain", uniform_images(200, seed=1))
    assert cli("embed", "--input", diverse, "--output", tmp_path / "diverse.fds", "--role", "ref")[0] == 0
    assert cli("embed", "--input", plain, "--output", tmp_path / "plain.fds", "--role", "gen")[0] == 0
    a, b = tmp_path / "diverse.fds", tmp_path / "plain.fds"
    # toy features already share the [0, 1] scale; see README on standardization
    sid_flags = ("--no-standardize", "--seed", "42")
    fid_val = float(cli("fid", "--ref", a, "--gen", b)[1])
    sid_val = float(cli("sid", "--ref", a, "--gen", b, *sid_flags)[1])
    sid_swapped = float(cli("sid", "--ref", b, "--gen", a, *sid_flags)[1])
    elapsed = time.perf_counter() - start
    criterion(f"FID {fid_val:.4f}, SID {sid_val:.4f}, swapped SID {sid_swapped:.4f}, "
              f"{elapsed:.1f}s for 200 images per side (budget 60s)")
    assert fid_val > 0 and sid_val > 0 and sid_swapped < 0
    assert elapsed < 60


@pytest.mark.slow
def test_ac9_performance(criterion):
    big_a = sample_gaussian(GaussianSpec.isotropic(2048, 1.0, 10_000, seed=1))
    big_b = sample_gaussian(GaussianSpec.isotropic(2048, 1.1, 10_000, seed=2), Role.GENERATED)
    start = time.perf_counter()
    value = fid.fid_from_features(big_a, big_b).value
    fid_time = time.perf_counter() - start
    del big_a, big_b
    a = sample_gaussian(GaussianSpec.isotropic(256, 1.0, 2000, seed=3))
    b = sample_gaussian(GaussianSpec.isotropic(256, 1.1, 2000, seed=4), Role.GENERATED)
    start = time.perf_counter()
    sid.sid_score(a, b, SidConfig())
    sid_time = time.perf_counter() - start
    criterion(f"FID 10000x2048 {fid_time:.1f}s (budget 30s, value {value:.2f}); "
              f"SID 2000x256 defaults {sid_time:.1f}s (budget 20s)")
    assert np.isfinite(value)
    assert fid_time < 30
    assert sid_time < 20
