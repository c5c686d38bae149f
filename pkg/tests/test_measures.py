import warnings

import numpy as np
import pytest

from otx.generators import generate_dumbbell, generate_grid_surface, generate_random_tree
from otx.measures import (check_measure, default_measures, default_sigma, geodesic_gaussian_mixture, load_measure,
                          pca_anchors, save_measure)


def test_huge_sigma_is_near_uniform():
    g = generate_grid_surface(15, 1)
    m = geodesic_gaussian_mixture(g, [0], [1.0], 1e6)
    assert m.max() / m.min() <= 1.01


def test_tiny_sigma_concentrates():
    g = generate_grid_surface(15, 1)
    m = geodesic_gaussian_mixture(g, [37], [1.0], 0.05)
    assert m[37] >= 0.99


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_sigma_must_be_positive(sigma):
    with pytest.raises(ValueError):
        geodesic_gaussian_mixture(generate_grid_surface(5), [0], [1.0], sigma)


@pytest.mark.parametrize("anchors, weights", [([0, 1], [1.0]), ([0], [0.5]), ([0, 1], [1.2, -0.2]), ([], [])])
def test_bad_mixture_weights(anchors, weights):
    with pytest.raises(ValueError):
        geodesic_gaussian_mixture(generate_grid_surface(5), anchors, weights, 1.0)


def test_mixture_is_a_measure_with_component_weights():
    g = generate_dumbbell(10, 1)
    left, right, _, _ = pca_anchors(g)
    m = geodesic_gaussian_mixture(g, [left, right], [0.7, 0.3], 2.0)
    check_measure(m)
    # the lobes are far apart, so each component keeps its own weight
    xs = g.coords[:, 0]
    mid = 0.5 * (xs.min() + xs.max())
    assert abs(m[xs < mid].sum() - 0.7) < 1e-3


def test_default_weights():
    g = generate_grid_surface(20, 1)
    left, right, low, high = pca_anchors(g)
    s = default_sigma(g)
    a, b = default_measures(g)
    np.testing.assert_allclose(a, geodesic_gaussian_mixture(g, [left, low], [0.7, 0.3], s), rtol=1e-14)
    np.testing.assert_allclose(b, geodesic_gaussian_mixture(g, [right, high], [0.65, 0.35], s), rtol=1e-14)


def test_anchors_are_extremal():
    # the dumbbell is elongated along x, so the principal axes are well defined
    g = generate_dumbbell(10, 1)
    left, right, low, high = pca_anchors(g)
    x, y = g.coords[:, 0], g.coords[:, 1]
    assert x[left] == x.min() and x[right] == x.max()
    assert y[low] == y.min() and y[high] == y.max()


def test_anchors_without_coordinates():
    g = generate_random_tree(60, seed=3)
    assert g.coords is None
    anchors = pca_anchors(g)
    assert all(0 <= x < 60 for x in anchors)
    a, b = default_measures(g)
    check_measure(a), check_measure(b)


def test_default_sigma_formula():
    g = generate_grid_surface(11, 0)
    # bbox diagonal 10 sqrt 2; mean edge length between 1 and sqrt 2
    assert default_sigma(g) == pytest.approx(max(0.18 * 10 * np.sqrt(2), 3 * g.edges()[2].mean()))


def test_check_measure():
    check_measure([0.25, 0.75])
    for bad in ([0.5, 0.6], [1.5, -0.5], [np.nan, 1.0], [[1.0]]):
        with pytest.raises(ValueError):
            check_measure(bad)


def test_file_roundtrip(tmp_path):
    p = tmp_path / "m.txt"
    w = np.array([0.1, 0.2, 0.7])
    save_measure(p, w)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        np.testing.assert_array_equal(load_measure(p), w)


def test_load_normalizes_with_warning(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# masses\n1\n3\n")
    with pytest.warns(UserWarning, match="normalising"):
        np.testing.assert_allclose(load_measure(p), [0.25, 0.75])


@pytest.mark.parametrize("body", ["1\n-2\n", "1\nabc\n", "inf\n"])
def test_load_rejects_bad_lines(tmp_path, body):
    p = tmp_path / "m.txt"
    p.write_text(body)
    with pytest.raises(ValueError):
        load_measure(p)
