"""
Test HJB Verifier - Unit tests cho HJBService.

Tests:
- Đẳng thức (Γ - q)v_a = 0 trên (0, a)
- Verdict HJB của hai mô hình Erlang(2)
- Miền của apply_generator và chẩn đoán chênh lệch giữa hai barrier
"""

import unittest
import os
import sys
import math
from unittest import mock

import numpy as np

# Thêm thư mục gốc vào path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.presets import load_preset
from models.reports import GeneratorQuadrature
from services.barrier_service import BarrierService
from services.hjb_service import HJBService
from services.scale_service import ScaleService
from utils.error_handler import DomainError


class TestInteriorIdentity(unittest.TestCase):
    """Test cases cho (Γ - q)v_a = 0 khi 0 < x < a."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        cls.scale = ScaleService()
        cls.barrier = BarrierService()
        cls.hjb = HJBService()

    def _check(self, name, barriers, tol=1e-5, points=60):
        model = load_preset(name)
        sf = self.scale.build(model)
        for a in barriers:
            residual = self.hjb.interior_residual(model, self.barrier.policy(sf, a), points=points)
            self.assertLessEqual(residual, tol, msg=f"{name}, a={a}")

    def test_erlang_sigma_1_4(self):
        """Test ba barrier cho mô hình σ = 1.4."""
        self._check('erlang_sigma_1_4', (0.4, 2.0, 6.0))

    def test_erlang_sigma_2(self):
        """Test ba barrier cho mô hình σ = 2."""
        self._check('erlang_sigma_2', (3.0, 10.5, 20.0))

    def test_bounded_variation(self):
        """Test mô hình Cramér-Lundberg (không có nhiễu Brown)."""
        self._check('exponential_cl', (1.0, 5.0))

    def test_brownian(self):
        """Test chuyển động Brown có drift."""
        self._check('brownian', (0.5, 2.0))


class TestErlangVerdicts(unittest.TestCase):
    """Test cases cho verdict HJB của ví dụ Erlang(2)."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        scale = ScaleService()
        barrier = BarrierService()
        cls.hjb = HJBService()
        cls.model_low = load_preset('erlang_sigma_1_4')
        cls.model_high = load_preset('erlang_sigma_2')
        sf_low = scale.build(cls.model_low)
        sf_high = scale.build(cls.model_high)
        cls.policy_low = barrier.policy(sf_low, barrier.optimal_barrier(sf_low))
        cls.policy_high = barrier.policy(sf_high, barrier.optimal_barrier(sf_high))

    def test_sigma_2_condition3_holds(self):
        """Test (Γ - q)v_{a*} <= 1e-5·(1 + |v|) trên lưới 1000 điểm của (a*, 40]."""
        a = self.policy_high.level
        grid = np.linspace(a, 40.0, 1001)[1:]
        report = self.hjb.verify_hjb(self.model_high, self.policy_high, grid=grid)
        self.assertTrue(report.condition3_holds, msg=str(report.to_dict()))
        self.assertTrue(report.hjb_holds)
        self.assertTrue(np.all(report.normalized() <= 1e-5))

    def test_sigma_1_4_condition3_fails(self):
        """Test tồn tại x > a* với (Γ - q)v_{a*}(x) > 1e-4."""
        report = self.hjb.verify_hjb(self.model_low, self.policy_low, x_hi=40.0)
        above = report.x > self.policy_low.level
        self.assertGreater(float(np.max(report.generator[above])), 1e-4)
        self.assertFalse(report.condition3_holds)
        self.assertFalse(report.hjb_holds)

    def test_report_rows(self):
        """Test các hàng x, gen_minus_q_v, one_minus_vprime và 1 - v' = 0 trên (a*, ∞)."""
        grid = np.array([1.0, 5.0, 12.0, 30.0])
        report = self.hjb.verify_hjb(self.model_high, self.policy_high, grid=grid)
        rows = report.rows()
        self.assertEqual(len(rows), 4)
        self.assertEqual(len(rows[0]), 3)
        self.assertEqual(report.one_minus_vprime[2], 0.0)
        self.assertTrue(np.all(report.one_minus_vprime <= 1e-9))

    def test_condition5_diagnostic(self):
        """Test chẩn đoán (Γ - q)(v_{a*} - v_x)(x-) hữu hạn và từ chối x <= a*."""
        value = self.hjb.condition5_diagnostic(self.model_high, self.policy_high, 15.0)
        self.assertTrue(math.isfinite(value))
        with self.assertRaises(DomainError):
            self.hjb.condition5_diagnostic(self.model_high, self.policy_high, 5.0)


class TestGeneratorDomain(unittest.TestCase):
    """Test cases cho miền và tham số quadrature."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        cls.model = load_preset('erlang_sigma_2')
        cls.sf = ScaleService().build(cls.model)
        cls.policy = BarrierService().policy(cls.sf, 10.5)
        cls.hjb = HJBService()

    def test_nonpositive_x_rejected(self):
        """Test x <= 0 bị từ chối."""
        with self.assertRaises(DomainError):
            self.hjb.apply_generator(self.model, self.policy, 0.0)

    def test_cutoff(self):
        """Test ε = eps_factor·min(1, x) và các điểm chia."""
        quad = GeneratorQuadrature()
        self.assertAlmostEqual(quad.cutoff(0.5), 0.5e-4)
        self.assertAlmostEqual(quad.cutoff(5.0), 1e-4)
        self.assertEqual(quad.split_points(5.0, barrier=3.0), [1e-4, 1.0, 2.0, 5.0])
        self.assertEqual(quad.split_points(5.0, barrier=3.0, start=0.0), [0.0, 1.0, 2.0, 5.0])
        self.assertEqual(quad.split_points(0.5, barrier=3.0), [0.5e-4, 0.5])

    def test_generator_uses_split_points(self):
        """Test generator_with_error chia tích phân bước nhảy theo split_points (σ > 0 và σ = 0)."""
        quad = GeneratorQuadrature()
        with mock.patch.object(GeneratorQuadrature, 'split_points', autospec=True,
                               side_effect=GeneratorQuadrature.split_points) as split:
            self.hjb.generator_with_error(self.model, self.policy, 12.0, quad)
            split.assert_called_with(quad, 12.0, 10.5)

            model = load_preset('exponential_cl')
            policy = BarrierService().policy(ScaleService().build(model), 2.0)
            self.hjb.generator_with_error(model, policy, 3.0, quad)
            split.assert_called_with(quad, 3.0, 2.0, start=0.0)

    def test_halved_quadrature_stable(self):
        """Test kết quả gần như không đổi khi giảm ε và rtol một nửa."""
        quad = GeneratorQuadrature()
        for x in (2.0, 8.0):
            first = self.hjb.apply_generator(self.model, self.policy, x, quad)
            second = self.hjb.apply_generator(self.model, self.policy, x, quad.halved())
            self.assertAlmostEqual(first, second, delta=1e-7 * (1.0 + abs(self.policy.value(x))))

    def test_invalid_quadrature(self):
        """Test eps_factor ngoài (0, 1)."""
        with self.assertRaises(DomainError):
            GeneratorQuadrature(eps_factor=1.5)


def suite():
    """Create test suite."""
    suite = unittest.TestSuite()
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestInteriorIdentity))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestErlangVerdicts))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestGeneratorDomain))
    return suite


if __name__ == '__main__':
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite())
    sys.exit(0 if result.wasSuccessful() else 1)
