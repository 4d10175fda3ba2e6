import csv
import io

import numpy as np
import pytest

import ambc_score as ab


def test_pilots_are_orthogonal():
    C, s = ab.build_pilots(3, 4)
    assert C.shape == (4, 4) and s.shape == (1, 4)
    np.testing.assert_array_equal(C @ C.conj().T, 4 * np.eye(4))
    np.testing.assert_array_equal(C[0], np.ones(4))


def test_noiseless_ls_recovers_channel():
    C, s = ab.build_pilots(3, 8, source="random_phase", seed=3)
    h = ab.sample_hbar(8, 3, seed=1)
    Y = ab.simulate_observation(h, C, s, p_p=2.0, sigma2=0.0)
    # Independent check of the observation model.
    np.testing.assert_allclose(Y, np.sqrt(2.0) * h @ (C * s), atol=1e-12)
    np.testing.assert_allclose(ab.ls_estimate(Y, C, s, 2.0), h, atol=1e-12)


def test_mmse_shrinks_ls_columnwise():
    C, s = ab.build_pilots(1, 2)
    Y = np.array([[1.0 + 1j, 2.0 - 1j]])
    ls = ab.ls_estimate(Y, C, s, 1.0)
    r = [1.0, 0.5]
    n = 1.0 / 2.0
    mm = ab.mmse_estimate(Y, C, s, 1.0, r, 1.0)
    np.testing.assert_allclose(mm, ls * np.array([ri / (ri + n) for ri in r]))


def test_als_with_gaussian_prior_tracks_mmse():
    C, s = ab.build_pilots(3, 4)
    p = ab.pilot_power_for_snr(10.0)
    r = [1.0] + [0.6] * 3
    errs_als, errs_mmse = [], []
    for t in range(200):
        h = ab.sample_hbar(8, 3, seed=100 + t)
        Y = ab.simulate_observation(h, C, s, p, seed=10_000 + t)
        errs_mmse.append(ab.nmse(h[:, :1], ab.mmse_estimate(Y, C, s, p, r)[:, :1]))
        errs_als.append(ab.nmse(h[:, :1], ab.als_estimate(Y, C, s, p, prior=r, seed=t)[:, :1]))
    assert np.mean(errs_als) == pytest.approx(np.mean(errs_mmse), rel=0.05)


def test_nmse_and_errors():
    h = np.ones((4, 1), dtype=complex)
    assert ab.nmse(h, 0.5 * h) == pytest.approx(0.25)
    with pytest.raises(Exception):
        ab.nmse(np.zeros((4, 1), dtype=complex), h)
    with pytest.raises(ValueError):
        ab.build_pilots(4, 4)


def test_config_and_sweep():
    cfg = ab.config("desk", trials=64, snr_db=[0, 10], estimators=["ls", "mmse"], seed=5)
    assert cfg["trials"] == 64
    with pytest.raises(ab.ConfigError):
        ab.config("desk", trails=5)
    rows, text = ab.run_sweep(cfg)
    lines = text.splitlines()
    assert lines[0] == "estimator,snr_db,link,nmse_mean,nmse_ci95,trials"
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == len(rows) == 2 * 2 * (2 + 3)
    by = {(r["estimator"], r["snr_db"], r["link"]): r["nmse_mean"] for r in rows}
    for snr in (0.0, 10.0):
        assert by[("mmse", snr, "direct")] < by[("ls", snr, "direct")]
    assert ab.run_sweep(cfg)[1] == text


def test_train_checkpoint_roundtrip(tmp_path):
    cfg = ab.config("desk", seed=2)
    cfg["train"].update(epochs=2, dataset_size=256, width=16, depth=2)
    ckpt, log = tmp_path / "a.ckpt", tmp_path / "a.log.csv"
    model = ab.train(cfg, ckpt, log)
    rows = log.read_text().splitlines()
    assert rows[0] == "epoch,dsm_loss,disc_loss,gen_adv_loss" and len(rows) == 3

    loaded = ab.ScoreModel.load(ckpt)
    assert (loaded.M, loaded.K) == (8, 3) and len(loaded.sigmas) == 20
    h = ab.sample_hbar(8, 3, seed=9)
    np.testing.assert_array_equal(loaded.score(h, 0.5), model.score(h, 0.5))
    np.testing.assert_allclose(loaded.denoise(h, 0.5), 0.25 * loaded.score(h, 0.5) + h)
    loaded.save(tmp_path / "b.ckpt")
    assert (tmp_path / "b.ckpt").read_bytes() == ckpt.read_bytes()

    C, s = ab.build_pilots(3, 4)
    Y = ab.simulate_observation(h, C, s, 10.0, seed=1)
    est = ab.als_estimate(Y, C, s, 10.0, model=loaded, seed=4)
    assert est.shape == (8, 4) and np.isfinite(est).all()

    with pytest.raises(ab.CheckpointError):
        ab.ScoreModel.load(tmp_path / "missing.ckpt")
    (tmp_path / "bad.ckpt").write_bytes(b"garbage")
    with pytest.raises(ab.CheckpointError):
        ab.ScoreModel.load(tmp_path / "bad.ckpt")
