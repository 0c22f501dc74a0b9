"""
Performative Control - Configuration Tests
Schéma YAML et factory
"""

import numpy as np
import pytest

from config.schema import load_settings, parse_settings
from core.interfaces import FrobeniusBall, RowSimplex, ConfigException, DimensionException
from core.factory import PerformativeFactory, create_instance, resolve_matrix
from core.dynamics.noise import DiscreteNoise
from core.dynamics.perturbation import NullPerturbation
from core.dynamics.stability import CERTIFIED


def _document(**overrides):
    document = {
        "system": {"A": [[0.5]], "B": [[1.0]], "T": 4, "H": 1, "gamma": 0.5},
        "policy": {"feasible_set": {"kind": "frobenius", "radius": 1.0}},
        "noise": {"kind": "sign_cube"},
    }
    document.update(overrides)
    return document


class TestSchema:

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigException):
            parse_settings({"bogus": 1})
        with pytest.raises(ConfigException):
            parse_settings(_document(noise={"kind": "sign_cube", "colour": "pink"}))

    def test_memory_must_be_shorter_than_horizon(self):
        document = _document()
        document["system"]["H"] = 4
        with pytest.raises(ConfigException):
            parse_settings(document)

    def test_defaults(self):
        settings = parse_settings({})
        assert settings.seed == 0
        assert not settings.has_system
        assert settings.stock.L == 10 and settings.stock.T == 60
        assert settings.stock.eta == 0.01

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigException):
            load_settings(tmp_path / "absent.yaml")

    def test_shipped_files_load(self, system_yaml, stable_yaml):
        assert load_settings(system_yaml).has_system
        assert load_settings(stable_yaml).seed == 7


class TestResolveMatrix:

    def test_shorthands(self):
        np.testing.assert_array_equal(resolve_matrix({"identity": 2.0}, (2, 2), "A"), 2.0 * np.eye(2))
        np.testing.assert_array_equal(resolve_matrix({"zeros": True}, (1, 3), "K"), np.zeros((1, 3)))
        np.testing.assert_array_equal(resolve_matrix({"diag": [1.0, 3.0]}, (2, 2), "Q"), np.diag([1.0, 3.0]))
        np.testing.assert_array_equal(resolve_matrix([[1.0, 2.0]], (1, 2), "B"), [[1.0, 2.0]])

    def test_bad_shapes(self):
        with pytest.raises(DimensionException):
            resolve_matrix([[1.0, 2.0]], (2, 1), "B")
        with pytest.raises(DimensionException):
            resolve_matrix({"identity": 1.0}, (2, 3), "B")
        with pytest.raises(ConfigException):
            resolve_matrix({"ones": True}, (2, 2), "A")


class TestFactory:

    def test_system_yaml_instance(self, system_yaml):
        instance = create_instance(system_yaml)
        config = instance.config
        assert (config.d_x, config.d_u, config.T, config.H) == (1, 1, 4, 1)
        assert config.sigma2 == pytest.approx(1.0)
        assert config.W == pytest.approx(1.0)
        assert isinstance(instance.noise, DiscreteNoise)
        assert isinstance(instance.feasible_set, FrobeniusBall)

    def test_dimensions_from_shorthand(self, stable_instance):
        assert stable_instance.config.d_x == 2
        assert stable_instance.config.policy_shape == (2, 4)

    def test_null_perturbation_and_simplex(self):
        instance = create_instance(_document(
            perturbation={"kind": "null"},
            policy={"feasible_set": {"kind": "simplex", "scale": 1.0}},
        ))
        assert isinstance(instance.perturbation, NullPerturbation)
        assert isinstance(instance.feasible_set, RowSimplex)

    def test_required_sections(self):
        with pytest.raises(ConfigException):
            create_instance({"seed": 1})

    def test_initial_policy_is_projected(self):
        document = _document()
        document["policy"]["init"] = [[5.0]]
        settings = parse_settings(document)
        instance = create_instance(settings)
        policy = PerformativeFactory.create_initial_policy(settings, instance)
        np.testing.assert_allclose(policy.matrix, [[1.0]])

    def test_certificate(self, stable_yaml):
        settings = load_settings(stable_yaml)
        instance = create_instance(settings)
        assert PerformativeFactory.create_certificate(settings, instance.config).verdict == CERTIFIED

    def test_certificate_needs_both_factors(self):
        document = _document()
        document["system"]["Q"] = [[1.0]]
        settings = parse_settings(document)
        with pytest.raises(ConfigException):
            PerformativeFactory.create_certificate(settings, create_instance(settings).config)

    def test_stock_config_and_schedule(self):
        settings = parse_settings({"seed": 4, "stock": {"L": 3, "T": 12, "schedule": "descend"}})
        cfg = PerformativeFactory.create_stock_config(settings)
        assert cfg.seed == 4
        assert PerformativeFactory.create_stock_config(settings, seed=9).seed == 9
        schedule = PerformativeFactory.create_schedule(settings, cfg)
        assert schedule.order == "descend"
        assert schedule.T == 12

    def test_stock_volatility_link(self):
        settings = parse_settings({"stock": {"L": 3, "T": 12, "link": "sensitivity"}})
        assert PerformativeFactory.create_stock_config(settings).link == "sensitivity"
        assert PerformativeFactory.create_stock_config(parse_settings({})).link == "location"
        with pytest.raises(ConfigException):
            parse_settings({"stock": {"link": "scale"}})
