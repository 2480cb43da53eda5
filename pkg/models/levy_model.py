"""
Levy Model - Mô hình rủi ro Lévy spectrally negative.

Model này quản lý:
- Bộ ba Lévy (γ, σ, ν) và lãi suất chiết khấu q
- Laplace exponent ψ và nghịch đảo phải Φ(q)
- Đọc đặc tả mô hình từ file JSON (fail-closed)
"""

import json
import math
import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, Optional

import numpy as np
from scipy import optimize

from models.levy_density import LevyDensity, NoJumps, build_density, levy_tail as _density_tail
from utils.error_handler import ConvergenceError, DomainError, ModelSpecError

logger = logging.getLogger("barrierlab.levy_model")

MODEL_KEYS = ('family', 'params', 'c', 'gamma', 'sigma', 'q', 'name')

# Dung sai của Φ(q)
PHI_RTOL = 1e-12
PHI_RESIDUAL_TOL = 1e-10


def _require_real(data: Dict[str, Any], key: str, positive: bool = False, nonnegative: bool = False) -> float:
    value = data[key]
    if isinstance(value, bool):
        raise ModelSpecError(f"phải là số thực, nhận {value!r}", field=key)
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ModelSpecError(f"phải là số thực, nhận {value!r}", field=key)
    if not math.isfinite(number):
        raise ModelSpecError("phải hữu hạn", field=key)
    if positive and number <= 0:
        raise ModelSpecError(f"phải dương, nhận {number}", field=key)
    if nonnegative and number < 0:
        raise ModelSpecError(f"phải không âm, nhận {number}", field=key)
    return number


@dataclass(frozen=True)
class LevyModel:
    """
    Mô hình rủi ro X với bộ ba Lévy (γ, σ, ν) và lãi suất chiết khấu q.

    ψ(θ) = γθ + σ²θ²/2 - ∫(1 - e^{-θx} - θx·1{x<1}) ν(dx).

    Attributes:
        gamma: Hệ số tuyến tính γ của bộ ba
        sigma: Hệ số Gauss σ >= 0
        density: Mật độ Lévy ν
        q: Lãi suất chiết khấu q > 0
        premium: Tốc độ phí c nếu mô hình được nhập dạng Cramér-Lundberg
        name: Tên preset/mô hình (tùy chọn)
    """
    gamma: float
    sigma: float
    density: LevyDensity
    q: float
    premium: Optional[float] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        """Kiểm tra tính hợp lệ của mô hình."""
        for key in ('gamma', 'sigma', 'q'):
            value = getattr(self, key)
            if not isinstance(value, (int, float, np.floating)) or not math.isfinite(value):
                raise ModelSpecError(f"phải là số thực hữu hạn, nhận {value!r}", field=key)
        if self.sigma < 0:
            raise ModelSpecError(f"phải không âm, nhận {self.sigma}", field='sigma')
        if self.q <= 0:
            raise ModelSpecError(f"phải dương, nhận {self.q}", field='q')
        if self.has_monotone_paths:
            raise ModelSpecError(
                "quá trình có quỹ đạo đơn điệu (σ = 0 và drift d <= 0 hoặc không có bước nhảy)",
                field='c' if self.premium is not None else 'gamma'
            )

    # ---- Khởi tạo ----------------------------------------------------------

    @classmethod
    def from_premium(
        cls,
        c: float,
        sigma: float,
        density: LevyDensity,
        q: float,
        name: str = ""
    ) -> 'LevyModel':
        """
        Tạo mô hình từ tốc độ phí c: γ = c - ∫(0,1) x ν(dx).

        Raises:
            ModelSpecError: Nếu c không dương hoặc ∫(0,1) x ν(dx) = ∞
        """
        if not math.isfinite(c) or c <= 0:
            raise ModelSpecError(f"phải dương, nhận {c}", field='c')
        small_mean = density.small_jump_mean
        if not math.isfinite(small_mean):
            raise ModelSpecError("dạng phí c yêu cầu ∫(0,1) x ν(dx) < ∞", field='c')
        return cls(gamma=float(c) - small_mean, sigma=float(sigma), density=density,
                   q=float(q), premium=float(c), name=name)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = "") -> 'LevyModel':
        """
        Tạo mô hình từ dictionary theo schema của file mô hình.

        Args:
            data: Dictionary với các khóa family, params, c hoặc gamma, sigma, q
            name: Tên mặc định khi data không có khóa 'name'

        Returns:
            LevyModel

        Raises:
            ModelSpecError: Khóa lạ, thiếu khóa hoặc giá trị không hợp lệ
        """
        if not isinstance(data, dict):
            raise ModelSpecError("đặc tả mô hình phải là một object JSON")
        unknown = sorted(set(data) - set(MODEL_KEYS))
        if unknown:
            raise ModelSpecError(f"khóa không hỗ trợ {unknown}", field=unknown[0])
        for key in ('family', 'q'):
            if key not in data:
                raise ModelSpecError("thiếu trường bắt buộc", field=key)
        if ('c' in data) == ('gamma' in data):
            raise ModelSpecError("cần đúng một trong hai trường 'c' hoặc 'gamma'", field='c')

        params = data.get('params', {})
        if not isinstance(params, dict):
            raise ModelSpecError("phải là object", field='params')
        density = build_density(str(data['family']), params)
        sigma = _require_real(data, 'sigma', nonnegative=True) if 'sigma' in data else 0.0
        q = _require_real(data, 'q', positive=True)
        model_name = str(data.get('name', name))

        if 'c' in data:
            return cls.from_premium(_require_real(data, 'c', positive=True), sigma, density, q, name=model_name)
        return cls(gamma=_require_real(data, 'gamma'), sigma=sigma, density=density, q=q, name=model_name)

    @classmethod
    def load(cls, path: str) -> 'LevyModel':
        """
        Đọc mô hình từ file JSON.

        Raises:
            ModelSpecError: File không đọc được hoặc JSON sai (kèm dòng/cột)
        """
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelSpecError(f"JSON không hợp lệ tại dòng {e.lineno} cột {e.colno}: {e.msg}", field=path)
        except OSError as e:
            raise ModelSpecError(f"không đọc được file: {e}", field=path)
        model = cls.from_dict(data, name=path)
        if model.density.family == 'custom':
            checks = model.validate_exponent()
            if not all(checks.values()):
                raise ModelSpecError(f"ψ không lồi ngặt trên lưới kiểm tra: {checks}", field='params')
        return model

    def with_changes(self, **changes) -> 'LevyModel':
        """Bản sao với một số trường thay đổi (sigma, q, name...)."""
        if self.premium is not None and 'gamma' not in changes:
            c = changes.pop('premium', self.premium)
            return LevyModel.from_premium(
                c, changes.get('sigma', self.sigma), changes.get('density', self.density),
                changes.get('q', self.q), name=changes.get('name', self.name)
            )
        return replace(self, **changes)

    # ---- Metadata ----------------------------------------------------------

    @property
    def finite_activity(self) -> bool:
        """ν(0, ∞) < ∞."""
        return self.density.finite_activity

    @property
    def bounded_variation(self) -> bool:
        """True khi σ = 0 và ∫(0,1) x ν(dx) < ∞."""
        return self.sigma == 0 and math.isfinite(self.density.small_jump_mean)

    @property
    def drift(self) -> float:
        """Drift d = γ + ∫(0,1) x ν(dx) (chỉ có nghĩa với bounded variation)."""
        return self.gamma + self.density.small_jump_mean

    @property
    def premium_rate(self) -> float:
        """c = γ + ∫(0,1) x ν(dx), tái tạo từ γ."""
        return self.drift

    @property
    def has_monotone_paths(self) -> bool:
        if self.sigma > 0:
            return False
        if isinstance(self.density, NoJumps):
            return True
        return self.bounded_variation and self.drift <= 0

    @property
    def rational(self) -> bool:
        """ψ(u) - q nhân mẫu số của mật độ claim là đa thức."""
        return self.density.rational_form() is not None

    @property
    def completely_monotone(self) -> bool:
        return self.density.completely_monotone

    @property
    def total_rate(self) -> float:
        return self.density.total_rate

    # ---- Laplace exponent --------------------------------------------------

    def laplace_exponent(self, theta):
        """
        ψ(θ) với θ >= 0 (vô hướng hoặc mảng).

        Raises:
            DomainError: Nếu có θ < 0
            ConvergenceError: Nếu tích phân bù của mật độ custom không hội tụ
        """
        arr = np.asarray(theta, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("laplace_exponent yêu cầu θ >= 0")
        value = self._psi(arr)
        if not np.all(np.isfinite(value)):
            raise ConvergenceError("tích phân bù của mật độ Lévy không hội tụ", residual=math.inf)
        return float(value) if np.ndim(value) == 0 else value

    def laplace_exponent_complex(self, s):
        """ψ(s) với Re s > 0, dùng cho nghịch đảo Laplace."""
        return self._psi(np.asarray(s, dtype=complex))

    def _psi(self, theta):
        jumps = self.density.compensated_integral(theta)
        return self.gamma * theta + 0.5 * self.sigma ** 2 * theta * theta - jumps

    def laplace_exponent_derivative(self, theta: float) -> float:
        """ψ'(θ) = γ + σ²θ - J'(θ)."""
        return self.gamma + self.sigma ** 2 * theta - self.density.compensated_integral_derivative(theta)

    def phi(self, q: Optional[float] = None) -> float:
        """
        Nghịch đảo phải Φ(q): nghiệm lớn nhất của ψ(θ) = q.

        Bracket hình học [0, θ_hi], brentq, sau đó Newton khi ψ' có dạng đóng.

        Args:
            q: Lãi suất (mặc định là q của mô hình)

        Returns:
            Φ(q) > 0

        Raises:
            DomainError: Nếu q <= 0
            ConvergenceError: Nếu |ψ(Φ) - q| vượt ngưỡng
        """
        if q is None:
            return self._phi_of_q
        return self._solve_phi(float(q))

    @cached_property
    def _phi_of_q(self) -> float:
        return self._solve_phi(self.q)

    def _solve_phi(self, q: float) -> float:
        if not q > 0:
            raise DomainError(f"phi yêu cầu q > 0, nhận q={q}")

        def excess(t: float) -> float:
            return float(self._psi(np.asarray(t))) - q

        lo, hi = 0.0, 1.0
        for _ in range(200):
            if excess(hi) > 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise ConvergenceError("không tìm được cận trên cho Φ(q)", residual=excess(hi))

        root = optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=max(PHI_RTOL * 1e-2, 4 * np.finfo(float).eps),
                               maxiter=500)

        if self.density.closed_form_derivative:
            best = abs(excess(root))
            for _ in range(3):
                slope = self.laplace_exponent_derivative(root)
                if slope <= 0 or best == 0.0:
                    break
                candidate = root - excess(root) / slope
                if candidate <= 0 or abs(excess(candidate)) >= best:
                    break
                root, best = candidate, abs(excess(candidate))

        residual = abs(excess(root))
        if residual > PHI_RESIDUAL_TOL * max(1.0, q):
            raise ConvergenceError(f"Φ({q}) không đạt dung sai", residual=residual)
        return root

    def levy_tail(self, x: float) -> float:
        """ν(x, ∞) với x > 0."""
        return _density_tail(self.density, x)

    def validate_exponent(self, points: int = 64) -> Dict[str, bool]:
        """
        Kiểm tra trên lưới: ψ lồi ngặt, và ψ > q, không giảm trên (Φ(q), ∞).

        Returns:
            Dictionary {'convex': bool, 'above_q_beyond_phi': bool}
        """
        phi = self.phi()
        theta = np.linspace(0.0, 4.0 * phi + 10.0, points + 1)[1:]
        values = np.asarray(self._psi(theta), dtype=float)
        second = values[2:] - 2.0 * values[1:-1] + values[:-2]
        scale = 1e-12 * (1.0 + np.abs(values[1:-1]))
        beyond = np.linspace(phi, 4.0 * phi + 10.0, points + 1)[1:]
        beyond_values = np.asarray(self._psi(beyond), dtype=float)
        return {
            'convex': bool(np.all(second > -scale)),
            'above_q_beyond_phi': bool(np.all(beyond_values > self.q) and np.all(np.diff(beyond_values) >= 0)),
        }

    # ---- Serialization ----------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary theo schema file mô hình."""
        data = self.density.to_dict()
        if self.premium is not None:
            data['c'] = self.premium
        else:
            data['gamma'] = self.gamma
        data['sigma'] = self.sigma
        data['q'] = self.q
        if self.name:
            data['name'] = self.name
        return data

    def describe(self) -> Dict[str, Any]:
        """Metadata của mô hình cho file kết quả."""
        info = self.to_dict()
        info.update({
            'gamma': self.gamma,
            'phi': self.phi(),
            'bounded_variation': self.bounded_variation,
            'finite_activity': self.finite_activity,
            'rational': self.rational,
            'completely_monotone': self.density.completely_monotone,
            'cm_verified': self.density.cm_verified,
        })
        return info

    def __str__(self) -> str:
        label = self.name or self.density.family
        return f"{label} (σ={self.sigma}, q={self.q})"
