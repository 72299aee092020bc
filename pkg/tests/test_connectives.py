import numpy as np
import pytest

from granapprox import (Isomorphism, ResidualTriplet, TNormKind,
                        coherence_violation, named_isomorphism, verify_laws)
from granapprox.tolerances import EPS_ISO, EPS_LAW

ALL_KINDS = ["minimum", "product", "lukasiewicz", "drastic", "nilpotent_minimum"]
RESIDUATED = ["minimum", "product", "lukasiewicz", "nilpotent_minimum"]


class TestTableValues:
    def test_lukasiewicz_tnorm(self, luk):
        assert luk.t_norm(0.95, 0.75) == pytest.approx(0.70, abs=1e-12)

    def test_neutral_element_all_kinds(self):
        for kind in ALL_KINDS:
            trip = ResidualTriplet.from_names(kind)
            assert trip.t_norm(0.37, 1.0) == pytest.approx(0.37, abs=1e-12)
            assert trip.t_norm(1.0, 0.37) == pytest.approx(0.37, abs=1e-12)

    def test_scaled_lukasiewicz_tnorm(self, luk_square):
        # phi(x) = x^2: T(0.8, 0.9) = sqrt(0.64 + 0.81 - 1)
        expected = np.sqrt(max(0.0, 0.8 ** 2 + 0.9 ** 2 - 1.0))
        assert luk_square.t_norm(0.8, 0.9) == pytest.approx(expected, abs=1e-12)

    def test_lukasiewicz_implicator(self, luk):
        assert luk.implicator(0.7, 0.6) == pytest.approx(0.9, abs=1e-12)

    def test_ordering_property_value(self):
        for kind in RESIDUATED:
            trip = ResidualTriplet.from_names(kind)
            assert trip.implicator(0.4, 0.4) == 1.0

    def test_product_implicator(self):
        trip = ResidualTriplet.from_names("product")
        assert trip.implicator(0.8, 0.2) == pytest.approx(0.25, abs=1e-12)

    def test_minimum_implicator(self):
        trip = ResidualTriplet.from_names("minimum")
        assert trip.implicator(0.8, 0.2) == pytest.approx(0.2, abs=1e-12)

    def test_negator(self, luk):
        assert luk.negator(0.4) == pytest.approx(0.6, abs=1e-12)

    def test_negator_boundaries_all_kinds(self):
        for kind in ALL_KINDS:
            trip = ResidualTriplet.from_names(kind)
            assert trip.negator(0.0) == 1.0
            assert trip.negator(1.0) == 0.0

    def test_scaled_negator_and_involutivity(self, luk_square):
        assert luk_square.negator(0.6) == pytest.approx(np.sqrt(1 - 0.36), abs=1e-12)
        grid = np.linspace(0, 1, 101)
        back = luk_square.negator(luk_square.negator(grid))
        assert np.max(np.abs(back - grid)) < 1e-9

    def test_vectorized_evaluation(self, luk):
        x = np.array([0.2, 0.8])
        out = luk.t_norm(x, np.array([0.9, 0.9]))
        assert out.shape == (2,)
        assert out[0] == pytest.approx(0.1, abs=1e-12)


class TestDomainValidation:
    @pytest.mark.parametrize("bad", [-0.1, 1.0001, float("nan"), float("inf")])
    def test_rejects_out_of_range(self, luk, bad):
        with pytest.raises(ValueError):
            luk.t_norm(bad, 0.5)
        with pytest.raises(ValueError):
            luk.implicator(0.5, bad)
        with pytest.raises(ValueError):
            luk.negator(bad)

    def test_unknown_names(self):
        with pytest.raises(ValueError):
            ResidualTriplet.from_names("hamacher")
        with pytest.raises(ValueError):
            named_isomorphism("cube")


class TestIsomorphism:
    def test_named_round_trip(self):
        for name in ("identity", "square", "sqrt"):
            iso = named_isomorphism(name)
            grid = np.linspace(0, 1, 101)
            assert np.max(np.abs(iso.inverse(iso.forward(grid)) - grid)) <= EPS_ISO

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Isomorphism("halved", lambda x: 0.5 * np.asarray(x), lambda x: 2.0 * np.asarray(x))

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            Isomorphism("wave", lambda x: np.sin(3 * np.asarray(x)) ** 2,
                        lambda x: np.asarray(x))

    def test_rejects_bad_inverse(self):
        with pytest.raises(ValueError):
            Isomorphism("mismatched", np.square, np.square)

    def test_custom_isomorphism_usable(self):
        cube = Isomorphism("cube", lambda x: np.asarray(x) ** 3,
                           lambda x: np.asarray(x) ** (1 / 3))
        trip = ResidualTriplet(TNormKind.LUKASIEWICZ, cube)
        expected = (max(0.0, 0.8 ** 3 + 0.9 ** 3 - 1)) ** (1 / 3)
        assert trip.t_norm(0.8, 0.9) == pytest.approx(expected, abs=1e-12)


class TestLaws:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("iso", ["identity", "square"])
    def test_applicable_laws_pass(self, kind, iso):
        trip = ResidualTriplet.from_names(kind, iso)
        report = verify_laws(trip, grid_step=0.05)
        assert report.passes(EPS_LAW), [
            (c.name, c.max_violation) for c in report.checks
            if c.applicable and c.max_violation > EPS_LAW]

    def test_drastic_residuation_not_applicable(self):
        report = verify_laws(ResidualTriplet.from_names("drastic"), 0.05)
        assert not report["residuation"].applicable
        # the violation is real and reported, it just does not apply
        assert report["residuation"].max_violation > 0.1

    def test_residuation_applicable_for_left_continuous(self):
        for kind in RESIDUATED:
            report = verify_laws(ResidualTriplet.from_names(kind), 0.1)
            assert report["residuation"].applicable
            assert report["residuation"].max_violation <= EPS_LAW

    def test_max_definability_scope(self):
        # holds exactly for the Lukasiewicz family; the nilpotent minimum is
        # IMTL but not continuous and genuinely violates it
        rep_luk = verify_laws(ResidualTriplet.from_names("lukasiewicz"), 0.1)
        assert rep_luk["max_definability"].applicable
        assert rep_luk["max_definability"].max_violation <= EPS_LAW
        rep_nm = verify_laws(ResidualTriplet.from_names("nilpotent_minimum"), 0.1)
        assert not rep_nm["max_definability"].applicable
        assert rep_nm["max_definability"].max_violation > 0.05

    def test_imtl_extras_scope(self):
        for kind in ("minimum", "product"):
            report = verify_laws(ResidualTriplet.from_names(kind), 0.1)
            assert not report["involutive_negator"].applicable
            assert not report["contraposition"].applicable
        for kind in ("lukasiewicz", "nilpotent_minimum"):
            report = verify_laws(ResidualTriplet.from_names(kind), 0.1)
            assert report["involutive_negator"].applicable
            assert report["involutive_negator"].max_violation <= EPS_LAW
            assert report["contraposition"].max_violation <= EPS_LAW

    def test_exact_lattice_evaluation_flag(self):
        assert verify_laws(ResidualTriplet.from_names("lukasiewicz"), 0.05).exact
        assert verify_laws(ResidualTriplet.from_names("lukasiewicz", "square"), 0.05).exact
        assert not verify_laws(ResidualTriplet.from_names("product"), 0.05).exact
        assert not verify_laws(ResidualTriplet.from_names("lukasiewicz", "sqrt"), 0.05).exact

    def test_grid_step_validation(self, luk):
        with pytest.raises(ValueError):
            verify_laws(luk, 0.0)
        with pytest.raises(ValueError):
            verify_laws(luk, 0.2)


class TestStructuralProperties:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_monotone_and_commutative(self, kind):
        trip = ResidualTriplet.from_names(kind)
        rng = np.random.default_rng(3)
        x, y, x2, y2 = rng.uniform(size=(4, 500))
        tx = np.asarray(trip.t_norm(x, y))
        assert np.max(np.abs(tx - trip.t_norm(y, x))) <= 1e-15
        # non-decreasing in both arguments
        assert np.all(np.asarray(trip.t_norm(np.maximum(x, x2), y)) >= tx - 1e-15)
        iv = np.asarray(trip.implicator(x, y))
        assert np.all(np.asarray(trip.implicator(np.minimum(x, x2), y)) >= iv - 1e-15)
        assert np.all(np.asarray(trip.implicator(x, np.maximum(y, y2))) >= iv - 1e-15)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_associative(self, kind):
        trip = ResidualTriplet.from_names(kind)
        rng = np.random.default_rng(4)
        x, y, z = rng.uniform(size=(3, 300))
        lhs = trip.t_norm(trip.t_norm(x, y), z)
        rhs = trip.t_norm(x, trip.t_norm(y, z))
        assert np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))) <= 1e-15

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("iso", ["identity", "square", "sqrt"])
    def test_iso_coherence(self, kind, iso):
        trip = ResidualTriplet.from_names(kind, iso)
        assert coherence_violation(trip, 0.05) <= EPS_ISO

    def test_flags(self):
        assert ResidualTriplet.from_names("lukasiewicz").is_imtl
        assert ResidualTriplet.from_names("nilpotent_minimum").is_imtl
        assert not ResidualTriplet.from_names("minimum").is_imtl
        assert not ResidualTriplet.from_names("drastic").is_left_continuous
        assert ResidualTriplet.from_names("lukasiewicz", "square").is_lukasiewicz_family
        assert not ResidualTriplet.from_names("nilpotent_minimum").is_strongly_max_definable
