import math

import numpy as np
import pytest

from ncrank.atom_rank import moment_triple
from ncrank.density import DensityGrid
from ncrank.exceptions import PreconditionError
from ncrank.mc_oracle import (
    McConfig,
    empirical_moments,
    gue_matrix,
    ks_distance,
    sample_spectrum,
    smoothed_cdf,
    spectrum_metadata,
    spectrum_scale,
    zero_window_mass,
)
from ncrank.pencil import LinearPencil, covariance_map
from ncrank.presets import load_preset


def test_gue_matrix_is_hermitian_with_unit_variance():
    rng = np.random.default_rng(3)
    x = gue_matrix(rng, 400)
    assert np.array_equal(x, x.conj().T)
    assert np.trace(x @ x).real / 400 == pytest.approx(1.0, abs=0.05)


def test_semicircle_sample_moments(semicircle):
    spectrum = sample_spectrum(semicircle, McConfig(1000, 1, 7))
    assert spectrum.shape == (1000,)
    assert spectrum.dtype == np.float64
    assert abs(np.mean(spectrum)) < 0.05
    assert empirical_moments(spectrum, 1) == pytest.approx(1.0, abs=0.05)
    assert np.all(np.diff(spectrum) >= 0.0)


def test_zero_pencil_spectrum():
    spectrum = sample_spectrum(LinearPencil.zero(2), McConfig(10, 2, 0))
    assert spectrum.shape == (40,)
    assert np.all(spectrum == 0.0)


def test_spectrum_is_deterministic(example_pencil):
    cfg = McConfig(30, 4, 12345)
    first = sample_spectrum(example_pencil, cfg, threads=1)
    second = sample_spectrum(example_pencil, cfg, threads=1)
    threaded = sample_spectrum(example_pencil, cfg, threads=3)
    assert np.array_equal(first, second)
    assert np.array_equal(first, threaded)
    assert not np.array_equal(first, sample_spectrum(example_pencil, McConfig(30, 4, 54321)))


def test_mc_config_validation():
    with pytest.raises(PreconditionError):
        McConfig(1, 1, 0)
    with pytest.raises(PreconditionError):
        McConfig(10, 0, 0)
    with pytest.raises(PreconditionError):
        McConfig(10, 1, -1)
    with pytest.raises(PreconditionError):
        McConfig(10, 1, 2 ** 64)


def test_metadata_records_generator():
    assert spectrum_metadata(McConfig(300, 20, 9)) == {"seed": 9, "d": 300, "samples": 20, "generator": "PCG64"}


def test_empirical_helpers():
    assert empirical_moments([1.0, -1.0, 2.0], 1) == pytest.approx(2.0)
    assert empirical_moments([1.0, -1.0, 2.0], 2) == pytest.approx(6.0)
    assert zero_window_mass([-1.0, 0.0, 0.0, 0.0005, 2.0], 1.0, window=1e-3) == pytest.approx(0.6)
    with pytest.raises(PreconditionError):
        empirical_moments([], 1)
    with pytest.raises(PreconditionError):
        zero_window_mass([], 1.0)


def test_spectrum_scale(example_pencil):
    assert spectrum_scale(example_pencil) == pytest.approx(math.sqrt(2.0))


def test_smoothed_cdf_limits():
    t = np.array([-1e6, 0.0, 1e6])
    values = smoothed_cdf([0.0, 0.0], t, 0.01)
    assert values == pytest.approx([0.0, 0.5, 1.0], abs=1e-6)


def test_ks_self_comparison(semicircle):
    spectrum = sample_spectrum(semicircle, McConfig(100, 1, 1))
    eps = 0.05
    t = np.linspace(-3.0, 3.0, 4001)
    densities = np.mean(eps / math.pi / ((t[:, None] - spectrum[None, :]) ** 2 + eps ** 2), axis=1)
    grid = DensityGrid(t, eps, densities)
    assert ks_distance(spectrum, grid=grid) <= 1e-3


def test_ks_requires_input():
    with pytest.raises(PreconditionError):
        ks_distance([0.0])
    with pytest.raises(PreconditionError):
        ks_distance([], p=LinearPencil(np.ones((1, 1, 1))))


@pytest.mark.slow
def test_ks_semicircle(semicircle):
    spectrum = sample_spectrum(semicircle, McConfig(1000, 20, 2024))
    assert ks_distance(spectrum, p=semicircle) <= 0.05


@pytest.mark.slow
@pytest.mark.parametrize("name", ["full_3x3", "a0", "a1", "a2"])
def test_ks_matrix_pencils(name):
    p = load_preset(name)
    spectrum = sample_spectrum(p, McConfig(300, 20, 77))
    assert ks_distance(spectrum, p=p) <= 0.07


@pytest.mark.slow
def test_zero_window_mass_shows_atom():
    p = load_preset("a0")
    spectrum = sample_spectrum(p, McConfig(300, 5, 11))
    assert zero_window_mass(spectrum, spectrum_scale(p)) == pytest.approx(0.6, abs=0.05)


@pytest.mark.slow
def test_moments_agree_with_random_matrices(example_pencil):
    spectrum = sample_spectrum(example_pencil, McConfig(400, 50, 5))
    m = moment_triple(covariance_map(example_pencil))
    for k, expected in zip((1, 2, 3), (m.a2, m.a4, m.a6)):
        assert empirical_moments(spectrum, k) == pytest.approx(expected, rel=0.05)
