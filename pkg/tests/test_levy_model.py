"""
Test Levy Model - Unit tests cho LevyModel, LevyDensity và presets.

Tests:
- Laplace exponent ψ và nghịch đảo phải Φ(q)
- Parser file mô hình (khóa lạ, thiếu khóa, JSON sai)
- Catalogue mật độ và ν(x, ∞)
"""

import unittest
import os
import sys
import json
import math
import tempfile

import numpy as np
from scipy import integrate

# Thêm thư mục gốc vào path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.levy_density import build_density, levy_tail, supported_families
from models.levy_model import LevyModel
from models.presets import COMPLETELY_MONOTONE_PRESETS, list_presets, load_preset, resolve_model
from utils.error_handler import DomainError, ModelSpecError


class TestLaplaceExponent(unittest.TestCase):
    """Test cases cho ψ và Φ."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        cls.erlang = load_preset('erlang_sigma_1_4')
        cls.brownian = load_preset('brownian')
        cls.exponential = load_preset('exponential_cl')

    def test_erlang_exponent_value(self):
        """Test ψ(1) = 21.4 + 0.98 - 10·(1 - 1/4) = 14.88."""
        self.assertAlmostEqual(self.erlang.laplace_exponent(1.0), 14.88, delta=1e-12)

    def test_exponent_at_zero(self):
        """Test ψ(0) = 0."""
        for name in ('erlang_sigma_2', 'stable', 'tempered_stable', 'pareto_cl'):
            self.assertAlmostEqual(load_preset(name).laplace_exponent(0.0), 0.0, delta=1e-12, msg=name)

    def test_negative_theta_rejected(self):
        """Test θ < 0 bị từ chối."""
        with self.assertRaises(DomainError):
            self.erlang.laplace_exponent(-1.0)

    def test_brownian_phi(self):
        """Test Φ(0.5) = √2 - 1 cho ψ(θ) = θ + θ²/2."""
        self.assertAlmostEqual(self.brownian.phi(), math.sqrt(2.0) - 1.0, delta=1e-12)

    def test_exponential_phi(self):
        """Test Φ(q) là nghiệm dương của cθ² + (cβ - λ - q)θ - qβ = 0."""
        c, lam, beta, q = 2.0, 1.0, 1.0, 0.05
        b = c * beta - lam - q
        expected = (-b + math.sqrt(b * b + 4.0 * c * q * beta)) / (2.0 * c)
        self.assertAlmostEqual(self.exponential.phi(), expected, delta=1e-12)

    def test_phi_residual(self):
        """Test |ψ(Φ) - q| <= 1e-10 trên catalogue."""
        for name in list_presets():
            model = load_preset(name)
            phi = model.phi()
            self.assertGreater(phi, 0.0, msg=name)
            self.assertLessEqual(abs(model.laplace_exponent(phi) - model.q), 1e-10 * max(1.0, model.q), msg=name)

    def test_phi_other_q(self):
        """Test Φ tăng theo q và phi(q <= 0) bị từ chối."""
        self.assertLess(self.erlang.phi(0.05), self.erlang.phi(0.2))
        with self.assertRaises(DomainError):
            self.erlang.phi(0.0)

    def test_stable_exponent_against_quadrature(self):
        """Test ψ dạng đóng của họ stable khớp định nghĩa tích phân."""
        model = load_preset('stable')
        lam, alpha = 1.0, 1.5
        for theta in (0.3, 1.0, 2.5):
            def integrand(y, t=theta):
                small = t * y if y < 1.0 else 0.0
                return (1.0 - math.exp(-t * y) - small) * lam * y ** (-1.0 - alpha)
            jumps = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13)[0] + \
                integrate.quad(integrand, 1.0, np.inf, epsabs=1e-13)[0]
            expected = model.gamma * theta - jumps
            self.assertAlmostEqual(model.laplace_exponent(theta), expected, delta=1e-8 * (1 + abs(expected)))

    def test_exponent_convex(self):
        """Test ψ lồi và vượt q sau Φ."""
        for name in ('erlang_sigma_1_4', 'weibull_cl', 'inverse_gaussian'):
            checks = load_preset(name).validate_exponent()
            self.assertTrue(all(checks.values()), msg=f"{name}: {checks}")


class TestModelParsing(unittest.TestCase):
    """Test cases cho from_dict / load / presets."""

    def setUp(self):
        """Setup trước mỗi test."""
        self.temp_dir = tempfile.mkdtemp()

    def _write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        return path

    def test_from_premium(self):
        """Test γ = c - ∫(0,1) y μ(dy)."""
        model = load_preset('exponential_cl')
        self.assertAlmostEqual(model.drift, 2.0, delta=1e-14)
        self.assertAlmostEqual(model.gamma, 2.0 - (1.0 - 2.0 * math.exp(-1.0)), delta=1e-14)
        self.assertTrue(model.bounded_variation)
        self.assertTrue(model.finite_activity)

    def test_unknown_key_rejected(self):
        """Test khóa lạ bị từ chối kèm tên trường."""
        with self.assertRaises(ModelSpecError) as ctx:
            LevyModel.from_dict({'family': 'exponential', 'params': {'lam': 1, 'beta': 1}, 'c': 2, 'q': 0.1,
                                 'premium': 3})
        self.assertEqual(ctx.exception.field, 'premium')

    def test_unknown_param_rejected(self):
        """Test tham số lạ của họ bị từ chối."""
        with self.assertRaises(ModelSpecError):
            build_density('exponential', {'lam': 1.0, 'beta': 1.0, 'mu': 2.0})

    def test_missing_q_rejected(self):
        """Test thiếu q."""
        with self.assertRaises(ModelSpecError) as ctx:
            LevyModel.from_dict({'family': 'exponential', 'params': {'lam': 1, 'beta': 1}, 'c': 2})
        self.assertEqual(ctx.exception.field, 'q')

    def test_invalid_parameters(self):
        """Test tham số âm và họ không hỗ trợ."""
        with self.assertRaises(ModelSpecError):
            build_density('exponential', {'lam': 1.0, 'beta': -1.0})
        with self.assertRaises(ModelSpecError):
            build_density('stable', {'lam': 1.0, 'alpha': 1.0})
        with self.assertRaises(ModelSpecError) as ctx:
            build_density('lognormal', {})
        self.assertEqual(ctx.exception.field, 'family')

    def test_monotone_paths_rejected(self):
        """Test quỹ đạo đơn điệu bị từ chối (σ = 0 và drift <= 0, hoặc không có bước nhảy)."""
        with self.assertRaises(ModelSpecError):
            LevyModel.from_dict({'family': 'none', 'params': {}, 'gamma': 1.0, 'sigma': 0.0, 'q': 0.1})
        with self.assertRaises(ModelSpecError):
            LevyModel.from_dict({'family': 'exponential', 'params': {'lam': 1, 'beta': 1}, 'gamma': -5.0,
                                 'sigma': 0.0, 'q': 0.1})

    def test_load_reports_line_and_column(self):
        """Test JSON sai báo dòng và cột."""
        path = self._write('broken.json', '{\n  "family": "exponential",\n  "q": 0.1,,\n}')
        with self.assertRaises(ModelSpecError) as ctx:
            LevyModel.load(path)
        self.assertIn('3', str(ctx.exception))

    def test_load_roundtrip(self):
        """Test to_dict -> file -> load cho mọi preset."""
        for name in list_presets():
            model = load_preset(name)
            path = self._write(f"{name}.json", json.dumps(model.to_dict()))
            loaded = LevyModel.load(path)
            self.assertAlmostEqual(loaded.phi(), model.phi(), delta=1e-12 * max(1.0, model.phi()), msg=name)

    def test_resolve_model(self):
        """Test --model nhận preset hoặc file, báo lỗi với tên khác."""
        self.assertEqual(resolve_model('erlang_sigma_2').sigma, 2.0)
        with self.assertRaises(ModelSpecError) as ctx:
            resolve_model('no_such_model')
        self.assertEqual(ctx.exception.field, 'model')

    def test_with_changes_keeps_premium(self):
        """Test thay σ giữ nguyên c."""
        model = load_preset('erlang_sigma_1_4').with_changes(sigma=2.0)
        self.assertAlmostEqual(model.drift, 21.4, delta=1e-12)
        self.assertEqual(model.sigma, 2.0)


class TestLevyDensities(unittest.TestCase):
    """Test cases cho catalogue mật độ."""

    def test_tail_matches_density_integral(self):
        """Test ν(x, ∞) = ∫_x^∞ μ."""
        for name in ('erlang_sigma_2', 'hyperexponential_cl', 'pareto_cl', 'weibull_cl', 'tempered_stable'):
            density = load_preset(name).density
            for x in (0.5, 2.0):
                expected = integrate.quad(lambda y: float(density.density(y)), x, np.inf, epsabs=1e-13)[0]
                self.assertAlmostEqual(levy_tail(density, x), expected, delta=1e-8 * (1 + expected), msg=name)

    def test_tail_domain(self):
        """Test levy_tail(x <= 0) bị từ chối."""
        with self.assertRaises(DomainError):
            levy_tail(load_preset('exponential_cl').density, 0.0)

    def test_completely_monotone_flags(self):
        """Test cờ completely monotone của catalogue."""
        for name in COMPLETELY_MONOTONE_PRESETS:
            self.assertTrue(load_preset(name).completely_monotone, msg=name)
        self.assertFalse(load_preset('erlang_sigma_2').completely_monotone)
        self.assertTrue(build_density('erlang', {'lam': 1.0, 'alpha': 1.0, 'shape': 1}).completely_monotone)

    def test_rational_forms(self):
        """Test họ hữu tỉ có (P, Q), họ khác trả None."""
        self.assertTrue(load_preset('erlang_sigma_2').rational)
        self.assertTrue(load_preset('hyperexponential_cl').rational)
        self.assertFalse(load_preset('pareto_cl').rational)
        self.assertFalse(load_preset('stable').rational)

    def test_supported_families(self):
        """Test danh sách họ."""
        families = supported_families()
        for family in ('none', 'exponential', 'erlang', 'hyperexponential', 'pareto', 'weibull',
                       'stable', 'tempered_stable', 'custom'):
            self.assertIn(family, families)


def suite():
    """Create test suite."""
    suite = unittest.TestSuite()
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestLaplaceExponent))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestModelParsing))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestLevyDensities))
    return suite


if __name__ == '__main__':
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite())
    sys.exit(0 if result.wasSuccessful() else 1)
