import dataclasses

import numpy as np
import pytest

from lecam.densities import affine, cosine, parse_spec, uniform
from lecam.errors import DomainError, UsageError
from lecam.quadrature import integrate

GRID = np.linspace(0.0, 1.0, 1001)


@pytest.mark.parametrize(
    "model",
    [uniform(), cosine([0.3]), cosine([0.2, 0.1, 0.05]), affine(0.5), affine(-1.2)],
    ids=lambda m: m.name,
)
def test_catalog_members_are_valid(model):
    model.validate()
    fx = model.pdf(GRID)
    assert fx.min() >= model.eps - 1e-12
    assert fx.max() <= model.M + 1e-12
    total, _ = integrate(model.pdf, 0.0, 1.0, tol=1e-12)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_cosine_clamps_into_class():
    f = cosine([0.4, 0.3])
    # coefficients rescaled so sum |a_k| = 1/2
    assert f.eps == pytest.approx(0.5, abs=1e-12)
    assert f.M == pytest.approx(1.5, abs=1e-12)
    f.validate()


def test_cosine_rejects_empty():
    with pytest.raises(DomainError):
        cosine([])


def test_primitive_is_antiderivative():
    for model in (cosine([0.3, 0.1]), affine(0.7)):
        x = np.linspace(0.01, 0.99, 101)
        h = 1e-6
        numeric = (model.primitive(x + h) - model.primitive(x - h)) / (2.0 * h)
        assert numeric == pytest.approx(model.pdf(x), abs=1e-7)
        assert float(model.primitive(np.array([0.0]))[0]) == 0.0


def test_analytic_derivative_matches_finite_difference():
    model = cosine([0.25, 0.05])
    x = np.linspace(0.0, 1.0, 101)
    stripped = dataclasses.replace(model, deriv=None)
    assert stripped.derivative(x) == pytest.approx(model.deriv(x), abs=1e-4)


def test_affine_range():
    with pytest.raises(DomainError):
        affine(2.0)
    f = affine(1.0)
    assert f.eps == pytest.approx(0.5)
    assert f.M == pytest.approx(1.5)


def test_parse_spec_roundtrip():
    assert parse_spec("uniform").name == "uniform"
    assert parse_spec("cosine:0.3").name == "cosine:0.3"
    assert parse_spec("affine:0.5").name == "affine:0.5"
    assert parse_spec("cosine:0.2,0.1").eps == pytest.approx(0.7)


def test_parse_spec_errors():
    with pytest.raises(UsageError):
        parse_spec("triangle:1")
    with pytest.raises(UsageError):
        parse_spec("cosine:abc")
    with pytest.raises(UsageError):
        parse_spec("cosine")
    with pytest.raises(UsageError):
        parse_spec("affine:1,2")
    with pytest.raises(UsageError):
        parse_spec("uniform:3")


def test_validate_catches_bound_violations():
    lying = dataclasses.replace(cosine([0.3]), eps=0.9)
    with pytest.raises(DomainError):
        lying.validate()
    lying = dataclasses.replace(cosine([0.3]), M=1.1)
    with pytest.raises(DomainError):
        lying.validate()


def test_validate_catches_hoelder_violation():
    lying = dataclasses.replace(cosine([0.3]), K=1e-3)
    with pytest.raises(DomainError):
        lying.validate()


def test_validate_catches_bad_normalization():
    bad = dataclasses.replace(
        uniform(), pdf=lambda x: np.full_like(np.asarray(x, dtype=float), 1.05), M=1.1
    )
    with pytest.raises(DomainError):
        bad.validate()


def test_class_parameter_guards():
    with pytest.raises(DomainError):
        dataclasses.replace(uniform(), gamma=1.5)
    with pytest.raises(DomainError):
        dataclasses.replace(uniform(), eps=2.0)  # eps > M
    with pytest.raises(DomainError):
        dataclasses.replace(uniform(), K=0.0)
