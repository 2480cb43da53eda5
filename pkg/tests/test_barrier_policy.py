"""
Test Barrier Policy - Unit tests cho BarrierService và BarrierPolicy.

Tests:
- Vị trí a* của hai mô hình Erlang(2)
- Điều kiện (2) và tính lồi của W' trên catalogue completely monotone
- Hàm giá trị barrier: công thức đóng, v' >= 1, barrier a* trội hơn barrier khác
"""

import unittest
import os
import sys
from unittest import mock

import numpy as np

# Thêm thư mục gốc vào path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.config import BarrierSettings
from models.levy_density import build_density
from models.policy import BarrierPolicy
from models.presets import COMPLETELY_MONOTONE_PRESETS, load_preset
from services.barrier_service import BarrierService
from services.scale_service import ScaleService
from utils.error_handler import DomainError


class TestErlangExample(unittest.TestCase):
    """Test cases cho ví dụ Erlang(2) với σ = 1.4 và σ = 2."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        scale = ScaleService()
        cls.service = BarrierService()
        cls.sf_low = scale.build(load_preset('erlang_sigma_1_4'))
        cls.sf_high = scale.build(load_preset('erlang_sigma_2'))
        cls.cert_low = cls.service.certify(cls.sf_low)
        cls.cert_high = cls.service.certify(cls.sf_high)

    def test_a_star_sigma_1_4(self):
        """Test a* ≈ 0.4 khi σ = 1.4."""
        self.assertAlmostEqual(self.cert_low.a_star, 0.4, delta=0.1)

    def test_a_star_sigma_2(self):
        """Test a* ≈ 10.5 khi σ = 2."""
        self.assertAlmostEqual(self.cert_high.a_star, 10.5, delta=0.1)

    def test_condition2_verdicts(self):
        """Test điều kiện (2) thất bại khi σ = 1.4 và đạt khi σ = 2."""
        self.assertFalse(self.cert_low.condition2_holds)
        self.assertIsNotNone(self.cert_low.violation_x)
        self.assertGreater(self.cert_low.worst_violation, 0.0)
        self.assertTrue(self.cert_high.condition2_holds)

    def test_certificate_consistency(self):
        """Test convexity_holds kéo theo condition2_holds."""
        for cert in (self.cert_low, self.cert_high):
            self.assertTrue(cert.consistent)
        self.assertFalse(self.cert_low.convexity_holds)

    def test_optimal_barrier_matches_certificate(self):
        """Test optimal_barrier trả cùng a* với certify."""
        self.assertEqual(self.service.optimal_barrier(self.sf_high), self.cert_high.a_star)

    def test_a_star_is_global_minimizer(self):
        """Test W'(a*) <= W'(x) trên lưới."""
        for sf, cert in ((self.sf_low, self.cert_low), (self.sf_high, self.cert_high)):
            x = np.linspace(0.0, cert.x_hi, 4001)
            self.assertLessEqual(sf.eval(cert.a_star, 1), float(np.min(sf.eval(x, 1))) * (1 + 1e-9))

    def test_grid_refinement_stability(self):
        """Test a* ổn định khi tăng gấp đôi lưới thô."""
        fine = BarrierService(BarrierSettings(coarse_points=4096))
        self.assertAlmostEqual(fine.optimal_barrier(self.sf_high), self.cert_high.a_star, delta=1e-6)

    def test_derivative_lower_bound(self):
        """Test v_{a*}' >= 1."""
        holds, smallest = self.service.check_derivative_lower_bound(self.sf_high, self.cert_high.a_star, 40.0)
        self.assertTrue(holds)
        self.assertGreaterEqual(smallest, 1.0 - 1e-9)

    def test_barrier_dominance(self):
        """Test v_{a*} >= v_a trên [0, min(a, a*)] cho 20 barrier khác."""
        alternatives = np.linspace(0.5, 30.0, 20)
        result = self.service.check_barrier_dominance(self.sf_high, self.cert_high.a_star, alternatives)
        self.assertTrue(result['holds'], msg=str(result))

    def test_no_diffusion_condition2_fails(self):
        """Test σ = 0: W' không tăng sau a* (chiến lược tối ưu là band, không phải barrier)."""
        sf = ScaleService().build(load_preset('erlang_sigma_0'))
        cert = self.service.certify(sf)
        self.assertFalse(cert.condition2_holds)
        self.assertFalse(cert.convexity_holds)

    def test_certificate_serialization(self):
        """Test các trường bắt buộc của chứng nhận."""
        data = self.cert_high.to_dict()
        for key in ('a_star', 'condition2_holds', 'convexity_holds', 'worst_violation', 'violation_x', 'grid_points'):
            self.assertIn(key, data)

    def test_convexity_tolerance_recorded(self):
        """Test chứng nhận ghi dung sai và biên của kiểm tra tính lồi."""
        tol = self.service.settings.monotone_tol
        for cert in (self.cert_low, self.cert_high):
            data = cert.to_dict()
            self.assertEqual(data['convexity_tol'], tol)
            self.assertEqual(data['convexity_strict'], cert.convexity_worst > 0.0)
            self.assertEqual(cert.convexity_holds, cert.convexity_worst > -tol)
        self.assertFalse(self.cert_low.convexity_strict)

    def test_convexity_within_tolerance_not_strict(self):
        """Test giá trị âm nhỏ hơn dung sai: convexity_holds nhưng không lồi ngặt."""
        tol = self.service.settings.monotone_tol
        profile = (True, -0.5 * tol, 2.0, 100)
        with mock.patch.object(BarrierService, 'convexity_profile', return_value=profile):
            cert = self.service.certify(self.sf_high)
        self.assertTrue(cert.convexity_holds)
        self.assertFalse(cert.convexity_strict)
        self.assertEqual(cert.convexity_worst, -0.5 * tol)
        self.assertEqual(cert.convexity_points, 100)


class TestBarrierValue(unittest.TestCase):
    """Test cases cho hàm giá trị v_a."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        cls.service = BarrierService()
        cls.sf = ScaleService().build(load_preset('exponential_cl'))

    def test_zero_barrier_at_zero(self):
        """Test v_0(0) = W(0)/W'(0) = c/(λ + q)."""
        self.assertAlmostEqual(self.service.barrier_value(self.sf, 0.0, 0.0), 2.0 / 1.05, delta=1e-10)

    def test_above_barrier_is_linear(self):
        """Test v_a(x) = x - a + v_a(a) khi x > a."""
        a = 3.0
        policy = self.service.policy(self.sf, a)
        for x in (3.5, 10.0):
            self.assertAlmostEqual(policy.value(x), x - a + policy.value_at_level, delta=1e-12)
        self.assertEqual(policy.derivative(5.0, 1), 1.0)

    def test_negative_surplus(self):
        """Test v_a(x) = 0 với x < 0."""
        self.assertEqual(self.service.barrier_value(self.sf, 2.0, -0.5), 0.0)

    def test_continuous_at_barrier(self):
        """Test v_a liên tục và v_a'(a-) = 1 tại a."""
        a = 2.0
        policy = BarrierPolicy(a, self.sf)
        self.assertAlmostEqual(policy.value(a - 1e-9), policy.value(a + 1e-9), delta=1e-8)
        self.assertAlmostEqual(policy.derivative(a, 1), 1.0, delta=1e-12)

    def test_vectorized(self):
        """Test value nhận mảng."""
        x = np.array([-1.0, 0.0, 1.0, 5.0])
        values = self.service.policy(self.sf, 2.0).value(x)
        self.assertEqual(values.shape, (4,))
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_negative_barrier_rejected(self):
        """Test a < 0 bị từ chối."""
        with self.assertRaises(DomainError):
            self.service.barrier_value(self.sf, -1.0, 0.5)
        with self.assertRaises(DomainError):
            BarrierPolicy(-0.1, self.sf)


class TestCompletelyMonotoneCatalogue(unittest.TestCase):
    """Test cases cho tính lồi của W' khi mật độ completely monotone."""

    def test_catalogue_convexity(self):
        """Test mọi preset completely monotone (và bản có nhiễu Brown) đạt tính lồi và điều kiện (2)."""
        scale = ScaleService()
        service = BarrierService()
        names = list(COMPLETELY_MONOTONE_PRESETS)
        for name in names:
            for sigma in (None, 0.5):
                model = load_preset(name) if sigma is None else load_preset(name).with_changes(sigma=sigma)
                sf = scale.build(model)
                cert = service.certify(sf)
                label = f"{name} σ={model.sigma}"
                self.assertTrue(cert.convexity_holds, msg=f"{label}: {cert.to_dict()}")
                self.assertTrue(cert.condition2_holds, msg=f"{label}: {cert.to_dict()}")

    def test_erlang_shape_one_is_exponential(self):
        """Test Erlang(1, β) cho cùng a* với mật độ mũ."""
        scale = ScaleService()
        service = BarrierService()
        erlang = load_preset('exponential_cl').with_changes(
            density=build_density('erlang', {'lam': 1.0, 'alpha': 1.0, 'shape': 1})
        )
        a_erlang = service.optimal_barrier(scale.build(erlang))
        a_exp = service.optimal_barrier(scale.build(load_preset('exponential_cl')))
        self.assertAlmostEqual(a_erlang, a_exp, delta=1e-8)


def suite():
    """Create test suite."""
    suite = unittest.TestSuite()
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestErlangExample))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestBarrierValue))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestCompletelyMonotoneCatalogue))
    return suite


if __name__ == '__main__':
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite())
    sys.exit(0 if result.wasSuccessful() else 1)
