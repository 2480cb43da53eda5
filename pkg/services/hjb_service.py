"""
HJB Service - Áp dụng toán tử Γ lên hàm giá trị barrier và kiểm chứng HJB.

Γf(x) = γf'(x) + (σ²/2)f''(x) + ∫(0,∞)[f(x-y) - f(x) + f'(x)y·1{y<1}] ν(dy)

Tích phân bước nhảy được chia thành:
- (0, ε]: số hạng Taylor ½f''(x)∫y²ν(dy) kèm ước lượng phần dư bậc 3
- (ε, x): quadrature thích nghi, chia tại min(1, x) và x - a
- [x, ∞): f(x-y) = 0 nên bằng -f(x)ν(x,∞) + f'(x)∫_[x,1) yν(dy)
"""

import logging
import warnings
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from models.config import VerificationSettings
from models.levy_model import LevyModel
from models.policy import BarrierPolicy
from models.reports import GeneratorQuadrature, VerificationReport
from utils.error_handler import ConvergenceError, DomainError

logger = logging.getLogger("barrierlab.hjb_service")


class HJBService:
    """
    Service kiểm chứng điều kiện HJB cho chiến lược barrier.

    Class này cung cấp các phương thức để:
    - Tính (Γ - q)v_a(x) tại một điểm
    - Lập báo cáo kiểm chứng trên lưới
    - Chẩn đoán hiệu (Γ - q)(v_{a*} - v_x) tại x
    """

    def __init__(self, settings: Optional[VerificationSettings] = None):
        """
        Khởi tạo HJBService.

        Args:
            settings: Cài đặt kiểm chứng (mặc định VerificationSettings())
        """
        self.settings = settings or VerificationSettings()

    def default_quadrature(self) -> GeneratorQuadrature:
        """GeneratorQuadrature theo cài đặt."""
        s = self.settings
        return GeneratorQuadrature(eps_factor=s.eps_factor, rtol=s.quad_rtol, limit=s.quad_limit)

    # ---- Toán tử ---------------------------------------------------------------

    def apply_generator(
        self,
        model: LevyModel,
        policy: BarrierPolicy,
        x: float,
        quad: Optional[GeneratorQuadrature] = None
    ) -> float:
        """
        (Γ - q)v_a(x), dùng giới hạn trái tại x = a.

        Raises:
            DomainError: x <= 0
            ConvergenceError: Quadrature không hội tụ
            ExtrapolationError: x vượt x_max của bảng scale function
        """
        return self.generator_with_error(model, policy, x, quad)[0]

    def generator_with_error(
        self,
        model: LevyModel,
        policy: BarrierPolicy,
        x: float,
        quad: Optional[GeneratorQuadrature] = None
    ) -> Tuple[float, float]:
        """
        (Γ - q)v_a(x) và ước lượng sai số (quadrature + phần dư Taylor).

        Returns:
            (giá trị, sai số ước lượng)
        """
        if not x > 0:
            raise DomainError(f"apply_generator yêu cầu x > 0, nhận x={x}")
        quad = quad or self.default_quadrature()
        density = model.density
        x = float(x)
        a = policy.level
        sf = policy.scale_function

        v = policy.value(x)
        v1 = policy.derivative(x, 1)
        diffusion = 0.0

        if model.bounded_variation and model.finite_activity:
            # ∫_0^x [v(x-y) - v(x)] μ dy - v(x)ν(x,∞) + v'(x)∫_(0,1) y μ dy
            jumps, error = self._integrate(
                lambda y: (policy.value(x - y) - v) * density.density(y),
                quad.split_points(x, a, start=0.0), quad
            )
            jumps += -v * density.tail(x) + v1 * density.small_jump_mean
            drift_term = model.gamma * v1
            return drift_term + jumps - model.q * v, error

        v2 = policy.derivative(x, 2, left=True)
        diffusion = 0.5 * model.sigma ** 2 * v2

        eps = quad.cutoff(x)
        small = 0.5 * v2 * density.small_jump_second_moment(eps)
        v3 = sf.eval(x, 3) / policy.slope_at_level if x < a else 0.0
        remainder = abs(v3) * density.small_jump_third_moment(eps) / 6.0

        def integrand(y: float) -> float:
            compensator = v1 * y if y < 1.0 else 0.0
            return (policy.value(x - y) - v + compensator) * density.density(y)

        middle, error = self._integrate(integrand, quad.split_points(x, a), quad)

        tail = -v * density.tail(x)
        if x < 1.0:
            tail += v1 * density.moment(x, 1.0, 1.0)

        total = model.gamma * v1 + diffusion + small + middle + tail - model.q * v
        return total, error + remainder

    @staticmethod
    def _integrate(integrand, breaks: Sequence[float], quad: GeneratorQuadrature) -> Tuple[float, float]:
        total, error = 0.0, 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            if hi <= lo:
                continue
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter('always', integrate.IntegrationWarning)
                value, abserr = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=quad.rtol, limit=quad.limit)
            if caught and abserr > 1e-6 * (1.0 + abs(value)):
                raise ConvergenceError(f"quadrature trên ({lo:.6g}, {hi:.6g}) không hội tụ", residual=abserr)
            total += value
            error += abserr
        return total, error

    # ---- Báo cáo ---------------------------------------------------------------

    def default_grid(self, policy: BarrierPolicy, x_hi: float, points: int = 1000) -> np.ndarray:
        """
        Lưới trên (0, x_hi] bỏ lân cận ± một bước lưới quanh barrier.
        """
        x = np.linspace(x_hi / points, x_hi, points)
        step = x_hi / points
        a = policy.level
        if a > 0:
            x = x[np.abs(x - a) > step]
        return x

    def verify_hjb(
        self,
        model: LevyModel,
        policy: BarrierPolicy,
        grid: Optional[Sequence[float]] = None,
        quad: Optional[GeneratorQuadrature] = None,
        x_hi: Optional[float] = None
    ) -> VerificationReport:
        """
        Kiểm chứng max{(Γ - q)v_a, 1 - v_a'} <= 0 trên lưới.

        Args:
            model: Mô hình
            policy: Chiến lược barrier
            grid: Lưới x (None = default_grid trên (0, x_hi])
            quad: Tham số quadrature
            x_hi: Biên phải khi tự tạo lưới (None = max(40, 4a))

        Returns:
            VerificationReport
        """
        quad = quad or self.default_quadrature()
        tol = self.settings.hjb_tol
        a = policy.level
        if grid is None:
            x_hi = x_hi if x_hi is not None else max(40.0, 4.0 * a)
            if policy.scale_function.is_tabulated:
                x_hi = min(x_hi, policy.scale_function.x_max)
            grid = self.default_grid(policy, x_hi)
        x = np.asarray(grid, dtype=float)
        if x.size == 0 or np.any(x <= 0):
            raise DomainError("lưới kiểm chứng phải khác rỗng và nằm trong (0, ∞)")

        generator = np.empty(x.size)
        quad_error = 0.0
        for i, xi in enumerate(x):
            generator[i], err = self.generator_with_error(model, policy, xi, quad)
            quad_error = max(quad_error, err)

        values = policy.value(x)
        slopes = policy.derivative(x, 1)
        one_minus = np.where(x > a, 0.0, 1.0 - slopes)
        normalized = generator / (1.0 + np.abs(values))

        inside = x < a
        outside = x > a
        interior_residual = float(np.max(np.abs(normalized[inside]))) if np.any(inside) else 0.0
        if np.any(outside):
            worst = int(np.argmax(np.where(outside, normalized, -np.inf)))
            condition3_worst, condition3_x = float(normalized[worst]), float(x[worst])
        else:
            condition3_worst, condition3_x = 0.0, None
        derivative_holds = bool(np.all(one_minus <= tol))
        hjb_holds = bool(np.all(normalized <= tol)) and derivative_holds

        report_warnings = []
        if policy.scale_function.is_tabulated:
            report_warnings.append("phần dư Taylor dùng W''' dạng sai phân hữu hạn (độ chính xác O(h²))")

        report = VerificationReport(
            barrier=a,
            x=x,
            generator=generator,
            one_minus_vprime=one_minus,
            values=values,
            tolerance=tol,
            quadrature=quad,
            quad_error=quad_error,
            interior_residual=interior_residual,
            interior_holds=interior_residual <= tol,
            condition3_holds=condition3_worst <= tol,
            condition3_worst=condition3_worst,
            condition3_x=condition3_x,
            derivative_holds=derivative_holds,
            hjb_holds=hjb_holds,
            warnings=report_warnings,
        )
        logger.info(
            f"verify_hjb a={a:.6g}: interior={interior_residual:.2e}, "
            f"worst (Γ-q)v={condition3_worst:.2e}, hjb={'pass' if hjb_holds else 'fail'}"
        )
        return report

    def interior_residual(
        self,
        model: LevyModel,
        policy: BarrierPolicy,
        points: int = 200,
        quad: Optional[GeneratorQuadrature] = None
    ) -> float:
        """max |(Γ - q)v_a(x)|/(1 + |v_a(x)|) trên lưới của (0, a(1 - 1/points))."""
        a = policy.level
        if a <= 0:
            raise DomainError("interior_residual yêu cầu a > 0")
        x = np.linspace(a / points, a * (1.0 - 1.0 / points), points)
        values = policy.value(x)
        residuals = [abs(self.apply_generator(model, policy, xi, quad)) / (1.0 + abs(vi)) for xi, vi in zip(x, values)]
        return float(max(residuals))

    def condition5_diagnostic(
        self,
        model: LevyModel,
        policy: BarrierPolicy,
        x: float,
        quad: Optional[GeneratorQuadrature] = None
    ) -> float:
        """
        Giới hạn trái tại x của (Γ - q)(v_{a*} - v_x), với x > a*.

        Chỉ là chẩn đoán, không dùng trong verdict.
        """
        if not x > policy.level:
            raise DomainError(f"condition5_diagnostic yêu cầu x > a*={policy.level}, nhận x={x}")
        other = BarrierPolicy(float(x), policy.scale_function)
        return self.apply_generator(model, policy, x, quad) - self.apply_generator(model, other, x, quad)
