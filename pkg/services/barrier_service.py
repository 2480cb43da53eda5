"""
Barrier Service - Service tìm barrier tối ưu và kiểm tra điều kiện tối ưu.

Service này cung cấp:
- Tìm a* = sup argmin W^(q)' (quét lưới thô rồi tinh chỉnh)
- Hàm giá trị barrier v_a(x)
- Kiểm tra W' không giảm sau a* và tính lồi ngặt của W'
- Lập chứng nhận tối ưu
"""

import logging
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np
from scipy import optimize

from models.config import BarrierSettings
from models.policy import BarrierPolicy, OptimalityCertificate
from models.scale_function import ScaleFunction
from utils.error_handler import DomainError

logger = logging.getLogger("barrierlab.barrier_service")


class BarrierService:
    """
    Service làm việc với chiến lược barrier.

    Class này cung cấp các phương thức để:
    - Tìm barrier ứng viên a*
    - Đánh giá hàm giá trị barrier
    - Kiểm tra các điều kiện đủ cho tính tối ưu
    """

    def __init__(self, settings: Optional[BarrierSettings] = None):
        """
        Khởi tạo BarrierService.

        Args:
            settings: Cài đặt barrier (mặc định BarrierSettings())
        """
        self.settings = settings or BarrierSettings()

    # ---- a* ------------------------------------------------------------------

    def initial_x_hi(self, sf: ScaleFunction) -> float:
        """Cận khởi đầu 4/Φ(q) + 10, không vượt x_max của bảng."""
        return min(4.0 / sf.phi + 10.0, sf.x_max)

    def bracket(self, sf: ScaleFunction, x_hi: Optional[float] = None) -> float:
        """
        Nới x_hi (nhân đôi) đến khi W'(x_hi) vượt mọi giá trị trên lưới,
        lớn hơn hai lần giá trị nhỏ nhất, và W' tăng trên 10% cuối lưới.

        Returns:
            x_hi thỏa điều kiện (hoặc x_max của bảng kèm cảnh báo)
        """
        x_hi = min(float(x_hi), sf.x_max) if x_hi is not None else self.initial_x_hi(sf)
        if not x_hi > 0:
            raise DomainError(f"x_hi phải dương, nhận {x_hi}")
        n = self.settings.coarse_points
        for _ in range(self.settings.max_doublings + 1):
            x = np.linspace(0.0, x_hi, n + 1)
            w1 = sf.eval(x, 1)
            last = w1[-(n // 10 + 1):]
            if w1[-1] > np.max(w1[:-1]) and w1[-1] > 2.0 * np.min(w1) and np.all(np.diff(last) > 0):
                return x_hi
            if x_hi >= sf.x_max:
                logger.warning(f"x_hi bị giới hạn bởi x_max={sf.x_max} của bảng; điều kiện bracket chưa đạt")
                return x_hi
            x_hi = min(2.0 * x_hi, sf.x_max)
        logger.warning(f"bracket chưa đạt sau {self.settings.max_doublings} lần nhân đôi, dùng x_hi={x_hi}")
        return x_hi

    def locate(self, sf: ScaleFunction, x_hi: Optional[float] = None) -> Tuple[float, float]:
        """
        Tìm a* và x_hi đã dùng.

        Quét lưới thô (coarse_points khoảng), lấy điểm lưới xa nhất bên phải
        có W' <= (1 + tie_rtol)·min, sau đó tinh chỉnh quanh điểm đó.

        Returns:
            (a_star, x_hi)
        """
        x_hi = self.bracket(sf, x_hi)
        n = self.settings.coarse_points
        x = np.linspace(0.0, x_hi, n + 1)
        w1 = sf.eval(x, 1)
        minimum = float(np.min(w1))
        candidates = np.flatnonzero(w1 <= minimum * (1.0 + self.settings.tie_rtol))
        i = int(candidates[-1])

        lo, hi = x[max(i - 1, 0)], x[min(i + 1, n)]
        refined = self._refine(sf, lo, hi)
        best_x, best_w = x[i], w1[i]
        if refined is not None:
            w_refined = sf.eval(refined, 1)
            if w_refined <= best_w * (1.0 + self.settings.tie_rtol):
                best_x = refined
        a_star = float(best_x) if best_x > self.settings.refine_xatol else 0.0
        logger.debug(f"a*={a_star}, x_hi={x_hi}, min W'={minimum}")
        return a_star, x_hi

    def _refine(self, sf: ScaleFunction, lo: float, hi: float) -> Optional[float]:
        xatol = self.settings.refine_xatol
        curvature_lo, curvature_hi = sf.eval(lo, 2), sf.eval(hi, 2)
        if curvature_lo < 0 < curvature_hi:
            # cực tiểu trong của W': W'' đổi dấu
            return float(optimize.brentq(lambda y: sf.eval(y, 2), lo, hi, xtol=xatol))
        if lo == 0.0 and curvature_lo >= 0:
            return 0.0
        result = optimize.minimize_scalar(
            lambda y: sf.eval(y, 1), bounds=(lo, hi), method='bounded', options={'xatol': xatol}
        )
        return float(result.x) if result.success else None

    def optimal_barrier(self, sf: ScaleFunction, x_hi: Optional[float] = None) -> float:
        """
        a* = sup{a >= 0 : W'(a) <= W'(x) với mọi x >= 0}.

        Args:
            sf: Scale function
            x_hi: Cận phải khởi đầu (None = 4/Φ + 10, tự nới)

        Returns:
            a* >= 0
        """
        return self.locate(sf, x_hi)[0]

    # ---- Hàm giá trị ---------------------------------------------------------

    @staticmethod
    def policy(sf: ScaleFunction, a: float) -> BarrierPolicy:
        """Tạo BarrierPolicy tại mức a."""
        return BarrierPolicy(float(a), sf)

    def barrier_value(self, sf: ScaleFunction, a: float, x):
        """
        Hàm giá trị của barrier a tại x.

        Raises:
            DomainError: a < 0
        """
        if a < 0:
            raise DomainError(f"barrier a phải >= 0, nhận {a}")
        return self.policy(sf, a).value(x)

    # ---- Điều kiện tối ưu ----------------------------------------------------

    def check_condition2(
        self,
        sf: ScaleFunction,
        a_star: float,
        x_hi: float,
        points: Optional[int] = None
    ) -> Tuple[bool, float, Optional[float]]:
        """
        Kiểm tra W'(a) <= W'(b) với a* <= a <= b <= x_hi trên lưới.

        Vi phạm khi W'(x_{i+1}) < W'(x_i) - monotone_tol·(1 + |W'(x_i)|).

        Returns:
            (holds, worst_violation, violation_x)
        """
        n = points or self.settings.coarse_points
        if x_hi <= a_star:
            return True, 0.0, None
        x = np.linspace(a_star, x_hi, n + 1)
        w1 = sf.eval(x, 1)
        drops = w1[:-1] - w1[1:]
        allowed = self.settings.monotone_tol * (1.0 + np.abs(w1[:-1]))
        violating = drops > allowed
        if not np.any(violating):
            return True, 0.0, None
        worst = int(np.argmax(np.where(violating, drops, -np.inf)))
        return False, float(drops[worst]), float(x[worst + 1])

    def convexity_profile(
        self,
        sf: ScaleFunction,
        x_hi: float,
        points: Optional[int] = None
    ) -> Tuple[bool, float, Optional[float], int]:
        """
        Tính lồi ngặt của W' trên lưới (0, x_hi].

        exp_sum: W''' tại các điểm lưới. tabulated: sai phân bậc hai của W'
        trên lưới thưa hơn (convexity_points).

        Returns:
            (holds, worst normalized value, its location, grid points)
        """
        tol = self.settings.monotone_tol
        if sf.is_tabulated:
            n = points or self.settings.convexity_points
            x = np.linspace(x_hi / n, x_hi, n)
            w1 = sf.eval(x, 1)
            second = w1[2:] - 2.0 * w1[1:-1] + w1[:-2]
            scale = 1.0 + np.abs(w1[1:-1])
            located = x[1:-1]
        else:
            n = points or self.settings.coarse_points
            x = np.linspace(x_hi / n, x_hi, n)
            second = sf.eval(x, 3)
            scale = 1.0 + np.abs(second)
            located = x
        normalized = second / scale
        worst = int(np.argmin(normalized))
        holds = bool(np.all(normalized > -tol))
        return holds, float(normalized[worst]), float(located[worst]), n

    def check_convexity(self, sf: ScaleFunction, x_hi: float) -> bool:
        """W^(q)' lồi trên (0, x_hi] theo lưới: mọi giá trị chuẩn hóa > -monotone_tol."""
        return self.convexity_profile(sf, x_hi)[0]

    def check_derivative_lower_bound(
        self,
        sf: ScaleFunction,
        a_star: float,
        x_hi: float,
        points: Optional[int] = None
    ) -> Tuple[bool, float]:
        """
        v_{a*}'(x) >= 1 trên lưới của (0, x_hi].

        Returns:
            (holds, giá trị nhỏ nhất của v')
        """
        n = points or self.settings.coarse_points
        policy = self.policy(sf, a_star)
        x = np.linspace(x_hi / n, x_hi, n)
        slopes = policy.derivative(x, 1)
        smallest = float(np.min(slopes))
        return bool(smallest >= 1.0 - self.settings.tie_rtol), smallest

    def check_barrier_dominance(
        self,
        sf: ScaleFunction,
        a_star: float,
        alternatives: Iterable[float],
        points: int = 200
    ) -> Dict[str, Any]:
        """
        v_{a*}(x) >= v_a(x) trên [0, min(a, a*)] cho từng barrier a thay thế.

        Returns:
            Dictionary {'holds': bool, 'worst_gap': float, 'worst_barrier': a}
        """
        best = self.policy(sf, a_star)
        worst_gap, worst_barrier = 0.0, None
        for a in alternatives:
            other = self.policy(sf, a)
            x = np.linspace(0.0, min(a, a_star), points)
            gap = other.value(x) - best.value(x)
            relative = float(np.max(gap / (1.0 + np.abs(best.value(x)))))
            if relative > worst_gap:
                worst_gap, worst_barrier = relative, a
        return {'holds': worst_gap <= self.settings.tie_rtol, 'worst_gap': worst_gap, 'worst_barrier': worst_barrier}

    def certify(self, sf: ScaleFunction, x_hi: Optional[float] = None) -> OptimalityCertificate:
        """
        Lập chứng nhận: a*, điều kiện (2), tính lồi, v_{a*}' >= 1.

        Args:
            sf: Scale function
            x_hi: Cận phải khởi đầu (None = tự động)

        Returns:
            OptimalityCertificate
        """
        a_star, x_hi = self.locate(sf, x_hi)
        holds, worst, where = self.check_condition2(sf, a_star, x_hi)
        convex, convex_worst, convex_x, convex_points = self.convexity_profile(sf, x_hi)
        bound_holds, _ = self.check_derivative_lower_bound(sf, a_star, x_hi)
        density = sf.model.density

        certificate = OptimalityCertificate(
            a_star=a_star,
            condition2_holds=holds,
            convexity_holds=convex,
            worst_violation=worst,
            violation_x=where,
            grid_points=self.settings.coarse_points + 1,
            x_hi=x_hi,
            convexity_points=convex_points,
            convexity_worst=convex_worst,
            convexity_x=convex_x,
            convexity_tol=self.settings.monotone_tol,
            convexity_strict=convex_worst > 0.0,
            derivative_bound_holds=bound_holds,
            completely_monotone=density.completely_monotone,
            cm_verified=density.cm_verified,
            representation=sf.representation,
        )
        if not certificate.consistent:
            logger.warning("W' lồi nhưng điều kiện (2) thất bại trên lưới; nên tăng độ phân giải")
        if convex and convex_worst <= 0.0:
            logger.info(f"W' lồi trong dung sai nhưng không ngặt trên lưới (worst={convex_worst:.3e}, x={convex_x})")
        if density.completely_monotone and not convex:
            logger.warning(f"mật độ completely monotone nhưng W' không lồi trên lưới (worst={convex_worst:.3e})")
        return certificate
