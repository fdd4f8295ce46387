import math
from fractions import Fraction

import numpy as np
import pytest

import bhchaos


def test_dimensions():
    assert bhchaos.dim_sector(5, 36) == 45600
    assert bhchaos.dim_sector(9, 21) == 2145572
    for L, N in [(4, 3), (5, 6), (7, 4)]:
        total = bhchaos.dim_sector(L, N, "odd") + bhchaos.dim_sector(L, N, "even")
        assert total == bhchaos.full_dimension(L, N) == math.comb(N + L - 1, N)
    assert bhchaos.basis_states(4, 3).shape == (bhchaos.dim_sector(4, 3), 4)


def test_ratio_is_exact():
    assert bhchaos.ratio_R(6, 3) == Fraction(5, 9)


def test_hamiltonian_matches_eigenvalues():
    h = bhchaos.hamiltonian(4, 5, 0.25)
    dense = h.toarray()
    assert np.array_equal(dense, dense.T)
    ref = np.linalg.eigvalsh(dense)
    np.testing.assert_allclose(bhchaos.eigenvalues(4, 5, 0.25), ref, rtol=0, atol=1e-10 * abs(ref).max())


def test_window_vectors_are_orthonormal():
    values, vectors, e_min, e_max = bhchaos.window(5, 9, 0.25, eps=0.5, count=20)
    assert values.shape == (20,)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(20), atol=1e-10)
    assert e_min < values.min() <= values.max() < e_max


def test_goe_statistics():
    assert bhchaos.mean_r_goe() == pytest.approx(4 - 2 * math.sqrt(3))
    assert bhchaos.p_goe(np.array([0.0, 1.0])) == pytest.approx([0.0, math.sqrt(3) / 2])
    r = bhchaos.goe_r_samples(200, 20, 1)
    assert abs(r.mean() - 0.5307) < 0.02
    pool = bhchaos.goe_pool(1024, 200, [1.0], seed=3)
    assert abs(pool[1.0].mean() - bhchaos.goe_mean_d1(1024)) < 0.003
    again = bhchaos.goe_pool(1024, 200, [1.0], seed=3)
    assert np.array_equal(pool[1.0], again[1.0])


def test_fractal_dimension():
    v = np.full(16, 0.25)
    assert bhchaos.gfd(v, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        bhchaos.gfd(v * 2, 1.0)


def test_config_errors_raise():
    with pytest.raises(bhchaos.ConfigError, match="line|:1:"):
        bhchaos.canonical_config("nonsense = 3\n")


def test_trajectory():
    points = bhchaos.run_trajectory(
        "systems = 5:9\nwindow.count = 30\nchaos.etas = 0.25\ngoe.samples = 200\nq = 1\n"
    )
    assert len(points) == 1
    p = points[0]
    assert p["error"] == ""
    assert p["ratio_reference"] == pytest.approx(p["chaos_var_d1"] / p["reference_var_d1"], rel=1e-12)
    assert len(p["chaos_d1"]) == 30
