import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdabp.config import KEYS, RunConfig
from crowdabp.errors import ConfigurationError
from crowdabp.runner import build_run
from crowdabp.snapshots import MAGIC, decode, encode, read_snapshot, state_fields, write_snapshot


def test_defaults_validate_and_roundtrip():
    cfg = RunConfig().validate()
    assert RunConfig.from_text(cfg.to_text()) == cfg
    assert len(cfg.to_text().splitlines()) == len(KEYS)


@settings(max_examples=80, deadline=None)
@given(
    Pe=st.floats(0, 100, allow_nan=False),
    De=st.floats(1e-6, 1.0),
    n=st.integers(1, 64),
    dt=st.one_of(st.none(), st.floats(1e-8, 1.0)),
    eps=st.one_of(st.none(), st.floats(1e-4, 1.0)),
    snaps=st.booleans(),
)
def test_text_roundtrip_is_lossless(Pe, De, n, dt, eps, snaps):
    cfg = RunConfig(Pe=Pe, De=De, n=n, dt=dt, mollify_eps=eps, snapshots=snaps)
    assert RunConfig.from_text(cfg.to_text()) == cfg


def test_unknown_key_is_named():
    with pytest.raises(ConfigurationError, match="model.Peclet"):
        RunConfig.from_text("model.Peclet=1.0\n")


def test_bad_values():
    with pytest.raises(ConfigurationError, match="grid.nx"):
        RunConfig.from_text("grid.nx=abc\n")
    with pytest.raises(ConfigurationError):
        RunConfig.from_text("just text\n")
    with pytest.raises(ConfigurationError):
        RunConfig(De=0.0).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(nx=7).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(on_violation="ignore").validate()
    with pytest.raises(ConfigurationError):
        RunConfig(mollify_alpha=2.0).validate()


def test_comments_and_blank_lines():
    cfg = RunConfig.from_text("# header\n\nmodel.Pe = 2.5  # faster\ninit.preset=none\ninit.file=data.csv\n")
    assert cfg.Pe == 2.5 and cfg.preset is None and cfg.init_file == "data.csv"


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        RunConfig.load(tmp_path / "absent.cfg")


def test_worker_override(monkeypatch):
    cfg = RunConfig(workers=3)
    monkeypatch.delenv("ABP_THREADS", raising=False)
    assert cfg.effective_workers() == 3
    monkeypatch.setenv("ABP_THREADS", "2")
    assert cfg.effective_workers() == 2
    monkeypatch.setenv("ABP_THREADS", "many")
    with pytest.raises(ConfigurationError):
        cfg.effective_workers()


def test_build_run_models():
    setup = build_run(RunConfig(model="gt1d", preset="gt-plateau", nx=16))
    assert setup.problems == [] and setup.state.grid.ndim == 1
    with pytest.raises(ConfigurationError):
        build_run(RunConfig(model="gt1d", preset="isotropic-uniform", nx=16))
    with pytest.raises(ConfigurationError):
        build_run(RunConfig(preset="gt-waves", nx=16, ny=16))
    setup = build_run(RunConfig(preset="aligned-dirac", nx=8, ny=8, n=3, mollify_eps=0.1))
    assert setup.distributional and setup.state.n == 3


# -- snapshots -------------------------------------------------------------------

def test_snapshot_layout():
    fields = np.arange(2 * 4 * 6, dtype=float).reshape(2, 4, 6)
    blob = encode(fields)
    assert blob[:4] == MAGIC
    assert np.frombuffer(blob[4:20], "<u4").tolist() == [1, 4, 6, 2]
    assert len(blob) == 20 + 8 * fields.size
    head, back = decode(blob)
    assert (head.nx, head.ny, head.count) == (4, 6, 2)
    assert np.array_equal(back, fields)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 9), st.integers(2, 9), st.integers(0, 2 ** 31))
def test_snapshot_roundtrip_is_exact(count, nx, ny, seed):
    fields = np.random.default_rng(seed).standard_normal((count, nx, ny)) * 1e3
    head, back = decode(encode(fields))
    assert np.array_equal(back, fields)


def test_one_dimensional_snapshot(tmp_path):
    fields = np.random.default_rng(1).standard_normal((2, 16))
    write_snapshot(tmp_path / "s.abps", fields)
    head, back = read_snapshot(tmp_path / "s.abps")
    assert head.ny == 1 and np.array_equal(back, fields)


def test_snapshot_corruption_detected():
    blob = encode(np.zeros((1, 4, 4)))
    with pytest.raises(ValueError):
        decode(b"XXXX" + blob[4:])
    with pytest.raises(ValueError):
        decode(blob[:-8])
    with pytest.raises(ValueError):
        decode(blob[:10])
    bad_version = blob[:4] + (2).to_bytes(4, "little") + blob[8:]
    with pytest.raises(ValueError):
        decode(bad_version)
    with pytest.raises(ValueError):
        encode(np.zeros(3))


def test_state_fields(make_state):
    from crowdabp.spectral import SpatialGrid

    s = make_state(SpatialGrid(8, 8), 2)
    assert np.array_equal(state_fields(s), s.values)
