import math

import pytest

import prodiso


def test_logistic_gap():
    assert abs(prodiso.spectral_gap("logistic") - 0.25) < 1e-3


def test_profile_and_c():
    assert prodiso.profile_1d("logistic", 0.3) == pytest.approx(0.21, abs=1e-12)
    assert prodiso.compute_c()["c"] > 0.45115


def test_bisector_boundary():
    v = [1 / math.sqrt(2), 1 / math.sqrt(2)]
    assert prodiso.boundary_measure("logistic", v, 0.0) == pytest.approx(math.sqrt(2) / 6, rel=1e-6)


def test_stability_verdicts():
    assert prodiso.noncoordinate_stability("logistic", -1.0, 0.0, 3)["tag"] == "Unstable"
    assert prodiso.coordinate_stability("logistic", 3.0)["tag"] == "Stable"
    assert prodiso.coordinate_stability("logistic", 0.5)["tag"] == "Unstable"


def test_errors_are_raised():
    with pytest.raises(prodiso.Error, match="InvalidArgument"):
        prodiso.spectral_gap("cauchy")
    with pytest.raises(prodiso.Error, match="DomainError"):
        prodiso.quantile("logistic", 1.5)


def test_default_bump_slopes():
    s = prodiso.perturbation_slopes()
    assert s["k_dot"] == pytest.approx(0.5, abs=1e-6)
