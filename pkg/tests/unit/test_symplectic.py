import math
import unittest

import numpy
from hypothesis import given, settings, strategies as st

from edrlab.symplectic import (
    ELLIPTIC,
    HYPERBOLIC,
    NILPOTENT,
    PRINTED_CONTRACTIVE,
    CouplingParams,
    DomainError,
    TransferMatrix,
    classify_regime,
    error_disturbance_commutator,
    error_free_matrix,
    error_free_params,
    expm_dynamics,
    generator,
    heisenberg_bound,
    heisenberg_map,
    is_error_free,
    omega,
    preset_params,
    regime_formula,
    solve_dynamics,
    symplectic_residual,
)

couplings = st.floats(min_value=-5, max_value=5, allow_nan=False)


def assert_matrix_close(test, m, expected, tol=1e-12):
    for x, y in zip(m, expected):
        test.assertAlmostEqual(x, y, delta=tol)


class CouplingParamsTests(unittest.TestCase):
    def test_non_finite(self):
        self.assertRaises(DomainError, CouplingParams, math.inf, 0, 0)
        self.assertRaises(DomainError, CouplingParams, 0, math.nan, 0)

    def test_hbar_positive(self):
        self.assertRaises(DomainError, CouplingParams, 0, 0, 1, hbar=0)

    def test_discriminant(self):
        p = CouplingParams(1.0, 2.0, -3.0)
        self.assertEqual(p.discriminant, -5.0)
        self.assertEqual(p.as_tuple(), (1.0, 2.0, -3.0))

    def test_too_strong(self):
        for p in (
            CouplingParams(1000, 0, 0),
            CouplingParams(709, 0, 0),
            CouplingParams(0, 1e200, 1e200),
            CouplingParams(0, 1e200, -1e200),
        ):
            self.assertRaises(DomainError, solve_dynamics, p)


class RegimeTests(unittest.TestCase):
    def test_classify(self):
        self.assertEqual(classify_regime(CouplingParams(0, 0, 1)).tag, NILPOTENT)
        self.assertEqual(classify_regime(CouplingParams(0, -1, 1)).tag, ELLIPTIC)
        self.assertEqual(classify_regime(CouplingParams(0, 1, 1)).tag, HYPERBOLIC)

    def test_tolerance_band(self):
        p = CouplingParams(1e-7, 0, 0)
        self.assertEqual(classify_regime(p).tag, NILPOTENT)
        self.assertEqual(classify_regime(p, tol=1e-15).tag, HYPERBOLIC)

    def test_generator(self):
        g = generator(CouplingParams(0.5, 2.0, -1.0))
        self.assertEqual(numpy.trace(g), 0)
        self.assertAlmostEqual(numpy.linalg.det(g), -(0.25 - 2.0))


class SolveDynamicsTests(unittest.TestCase):
    def test_von_neumann(self):
        m = solve_dynamics(CouplingParams(0, 0, 1))
        self.assertEqual(m, TransferMatrix(1, 0, 1, 1))

    def test_identity(self):
        m = solve_dynamics(CouplingParams(0, 0, 0))
        self.assertEqual(m, TransferMatrix(1, 0, 0, 1))

    def test_elliptic(self):
        m = solve_dynamics(CouplingParams(0, -1, 1))
        expected = (math.cos(1), -math.sin(1), math.sin(1), math.cos(1))
        assert_matrix_close(self, m, expected)

    def test_hyperbolic(self):
        m = solve_dynamics(CouplingParams(0, 1, 1))
        expected = (math.cosh(1), math.sinh(1), math.sinh(1), math.cosh(1))
        assert_matrix_close(self, m, expected)

    def test_squeeze(self):
        m = solve_dynamics(CouplingParams(1, 0, 0))
        assert_matrix_close(self, m, (math.e, 0, 0, 1 / math.e))

    def test_series_region_matches_expm(self):
        # |alpha^2 + beta*gamma| below the series cutoff but outside the band
        for disc in (1e-5, -1e-5, 5e-4, -5e-4):
            p = CouplingParams(0.3, 2.0, (disc - 0.09) / 2.0)
            assert_matrix_close(self, solve_dynamics(p), expm_dynamics(p), 1e-13)

    def test_unimodular_random(self):
        rng = numpy.random.default_rng(1)
        worst = 0.0
        for alpha, beta, gamma in rng.uniform(-5, 5, size=(10000, 3)):
            m = solve_dynamics(CouplingParams(alpha, beta, gamma))
            worst = max(worst, m.det_residual())
        self.assertLessEqual(worst, 1e-12)

    def test_unimodular_small_couplings(self):
        rng = numpy.random.default_rng(2)
        for alpha, beta, gamma in rng.uniform(-0.5, 0.5, size=(1000, 3)):
            m = solve_dynamics(CouplingParams(alpha, beta, gamma))
            self.assertLessEqual(abs(m.det - 1), 1e-12)

    @given(couplings, couplings, couplings)
    @settings(max_examples=300, deadline=None)
    def test_matches_expm(self, alpha, beta, gamma):
        p = CouplingParams(alpha, beta, gamma)
        m = solve_dynamics(p)
        e = expm_dynamics(p)
        scale = max(1.0, max(abs(x) for x in m))
        for x, y in zip(m, e):
            self.assertLessEqual(abs(x - y) / scale, 1e-10)

    @given(couplings, couplings, couplings)
    @settings(max_examples=300, deadline=None)
    def test_heisenberg_map_symplectic(self, alpha, beta, gamma):
        m = solve_dynamics(CouplingParams(alpha, beta, gamma))
        scale = max(1.0, max(abs(x) for x in m)) ** 2
        self.assertLessEqual(symplectic_residual(m) / scale, 1e-12)

    def test_heisenberg_map_rows(self):
        m = TransferMatrix(2.0, 3.0, 1.0, 2.0)
        s = heisenberg_map(m)
        numpy.testing.assert_array_equal(s[1], [1.0, 2.0, 0.0, 0.0])
        numpy.testing.assert_array_equal(s[2], [0.0, 0.0, 2.0, -1.0])
        numpy.testing.assert_array_equal(s[3], [0.0, 0.0, -3.0, 2.0])


class RegimeContinuityTests(unittest.TestCase):
    def test_boundary_approaches(self):
        rng = numpy.random.default_rng(3)
        for _ in range(100):
            alpha = rng.uniform(-2, 2)
            beta = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 2)
            gamma = (rng.uniform(-1e-10, 1e-10) - alpha ** 2) / beta
            p = CouplingParams(alpha, beta, gamma)
            for tag in (NILPOTENT, ELLIPTIC, HYPERBOLIC):
                form = regime_formula(p, tag)
                assert_matrix_close(self, form, solve_dynamics(p), 1e-8)

    def test_unknown_regime(self):
        self.assertRaises(ValueError, regime_formula, CouplingParams(1, 1, 1), "x")


class TransferMatrixTests(unittest.TestCase):
    def test_not_unimodular(self):
        self.assertRaises(DomainError, TransferMatrix, 1, 1, 1, 1)

    def test_unchecked(self):
        m = TransferMatrix(1, 1, 1, 1, check=False)
        self.assertEqual(m.det, 0)

    def test_full_heisenberg(self):
        self.assertTrue(TransferMatrix(1, 0, 1, 1).full_heisenberg)
        self.assertFalse(error_free_matrix(1.0).full_heisenberg)
        self.assertTrue(TransferMatrix(1, 1, -1, 0).full_heisenberg)

    def test_as_array_round_trip(self):
        m = TransferMatrix(2.0, 1.0, 1.0, 1.0)
        self.assertEqual(TransferMatrix.from_array(m.as_array()), m)


class OmegaTests(unittest.TestCase):
    def test_values(self):
        self.assertEqual(omega(2), 1.0)
        self.assertAlmostEqual(omega(0), math.pi / 2)
        self.assertAlmostEqual(omega(1), 2 * math.pi / (3 * math.sqrt(3)))

    def test_domain(self):
        self.assertRaises(DomainError, omega, -2)
        self.assertRaises(DomainError, omega, -3)
        self.assertRaises(DomainError, omega, math.nan)

    def test_continuous_at_two(self):
        for a in (2 - 1e-3, 2 - 1e-5, 2 + 1e-5, 2 + 1e-3):
            self.assertAlmostEqual(omega(a), 1 + (1 - a / 2) / 3, delta=1e-6)
        self.assertLess(omega(2 + 1e-3), 1.0)
        self.assertGreater(omega(2 - 1e-3), 1.0)


class ErrorFreeTests(unittest.TestCase):
    def test_family(self):
        for a in numpy.linspace(-1.99, 10, 51)[1:]:
            m = solve_dynamics(error_free_params(a))
            assert_matrix_close(self, m, (a, -1, 1, 0), 1e-9)
            self.assertTrue(is_error_free(m))

    def test_near_two(self):
        for a in (2 - 1e-6, 2.0, 2 + 1e-6):
            m = solve_dynamics(error_free_params(a))
            assert_matrix_close(self, m, (a, -1, 1, 0))

    def test_close_to_minus_two(self):
        for k in range(2, 15):
            a = -2 + 10.0 ** -k
            p = error_free_params(a)
            self.assertEqual(classify_regime(p).tag, ELLIPTIC)
            self.assertAlmostEqual(p.discriminant, -math.acos(a / 2) ** 2, delta=1e-9)
            m = solve_dynamics(p)
            assert_matrix_close(self, m, (a, -1, 1, 0))
            self.assertTrue(is_error_free(m, tol=1e-12))

    def test_discriminant_matches_plain_coupling(self):
        for a in (-1.5, 0.0, 1.0, 2.0, 5.0):
            p = error_free_params(a)
            plain = CouplingParams(*p.as_tuple())
            self.assertEqual(p, plain)
            self.assertAlmostEqual(p.discriminant, plain.discriminant, delta=1e-12)

    def test_commutator(self):
        m = error_free_matrix(3.0)
        self.assertEqual(error_disturbance_commutator(m), 0.0)
        self.assertEqual(heisenberg_bound(m), 0.0)
        vn = TransferMatrix(1, 0, 1, 1)
        self.assertEqual(error_disturbance_commutator(vn), -1.0)
        self.assertEqual(heisenberg_bound(vn, hbar=2.0), 1.0)


class PresetTests(unittest.TestCase):
    def test_presets(self):
        self.assertEqual(preset_params("von-neumann").as_tuple(), (0, 0, 1))
        contractive = preset_params("contractive")
        assert_matrix_close(self, solve_dynamics(contractive), (1, -1, 1, 0))
        printed = preset_params("printed-contractive")
        self.assertEqual(printed.as_tuple(), PRINTED_CONTRACTIVE)
        self.assertFalse(is_error_free(solve_dynamics(printed)))

    def test_error_free_needs_a(self):
        self.assertRaises(DomainError, preset_params, "error-free")

    def test_unknown(self):
        self.assertRaises(KeyError, preset_params, "heisenberg")


if __name__ == "__main__":
    unittest.main()
