"""Smoke tests for the python surface of the core library."""

import numpy as np
import pytest

import xsep


def test_train_and_code_roundtrip():
    rng = np.random.default_rng(0)
    init = xsep.random_init(8, 12, 10, seed=3)
    truth = xsep.random_init(8, 12, 10, seed=4)
    z = np.zeros((12, 120))
    v = np.zeros((10, 120))
    for t in range(120):
        z[rng.integers(0, 12), t] = rng.uniform(0.3, 1.0)
        v[rng.integers(0, 10), t] = rng.uniform(0.3, 1.0)
    y = truth.psi_c @ z
    x = truth.phi_c @ z + truth.phi @ v

    cfg = xsep.TrainConfig()
    cfg.s_z = 1
    cfg.s_v = 1
    cfg.max_iters = 10
    cfg.quiet = True
    res = xsep.train_coupled(y, x, cfg, init)
    assert len(res.trace) <= 10
    assert res.trace == sorted(res.trace, reverse=True)
    assert res.dict.psi_c.shape == (8, 12)


def test_momp_budgets():
    dictionary = xsep.random_init(6, 8, 6, seed=1)
    y = dictionary.psi_c[:, 2] * 1.5
    x = dictionary.phi_c[:, 2] * 1.5
    z, v = xsep.momp(y, x, dictionary, xsep.SparsityBudget(2, 2))
    assert np.count_nonzero(z) <= 2
    assert np.count_nonzero(v) <= 2
    assert abs(z[2] - 1.5) < 1e-8


def test_separation_recovers_planted_mixture():
    d = xsep.random_init(10, 14, 8, seed=5)
    z1 = np.zeros(14)
    z2 = np.zeros(14)
    v = np.zeros(8)
    z1[3], z2[7], v[1] = 0.9, -0.7, 0.5
    y1, y2 = d.psi_c @ z1, d.psi_c @ z2
    x1 = d.phi_c @ z1 + d.phi @ v
    x2 = d.phi_c @ z2 + d.phi @ v
    sol = xsep.solve_separation(x1 + x2, y1, y2, d)
    assert sol.converged
    r1, r2 = xsep.reconstruct_patches(sol, d, True)
    assert xsep.nmse(x1, r1) < 1e-3
    assert xsep.nmse(x2, r2) < 1e-3


def test_patch_pyramid_identities():
    rng = np.random.default_rng(2)
    img = rng.uniform(0.0, 255.0, size=(40, 32))
    dc, cols = xsep.extract_patches(img, patch=8, step=4)
    assert dc.shape == (10, 8)
    assert cols.shape == (64, 80)
    assert np.allclose(cols.mean(axis=0), 0.0, atol=1e-12)

    low, high = xsep.pyramid_decompose(img, 8, [4, 4])
    back = xsep.pyramid_reconstruct(low, high, 8, [4, 4])
    assert np.allclose(back, img, atol=1e-10)

    d1, d2 = xsep.dc_split(10.0, 30.0, 10.0)
    assert d1 + d2 == 10.0


def test_metrics_and_errors():
    img = np.full((16, 16), 100.0)
    assert xsep.psnr(img, img + 4.0) == pytest.approx(10 * np.log10(255.0**2 / 16.0))
    assert xsep.ssim(img, img) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        xsep.psnr(img, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        xsep.nmse(np.zeros(3), np.zeros(3))


def test_storage_roundtrip(tmp_path):
    m = np.array([[1.5, -2.25], [0.0, 1e-12]])
    path = str(tmp_path / "m.cdlm")
    xsep.write_matrix(m, path)
    assert np.array_equal(xsep.read_matrix(path), m)

    d = xsep.random_init(6, 9, 7, seed=8)
    prefix = str(tmp_path / "dict")
    xsep.save_dictionary(prefix, d, s_z=2, s_v=3)
    back, meta = xsep.load_dictionary(prefix)
    assert np.array_equal(back.psi_c, d.psi_c)
    assert meta["s_z"] == 2 and meta["s_v"] == 3


def test_image_io_roundtrip(tmp_path):
    img = np.arange(12, dtype=float).reshape(3, 4) * 20.0
    path = str(tmp_path / "img.pgm")
    xsep.write_image(img, path)
    assert np.array_equal(xsep.read_image(path), img)
