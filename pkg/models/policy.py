"""
Policy Model - Chiến lược barrier và chứng nhận tối ưu.

Model này chứa:
- BarrierPolicy: barrier a và hàm giá trị v_a theo công thức đóng qua W^(q)
- OptimalityCertificate: a*, điều kiện đơn điệu của W' sau a*, tính lồi của W'
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from models.scale_function import ScaleFunction
from utils.error_handler import DomainError


@dataclass(frozen=True, eq=False)
class BarrierPolicy:
    """
    Chiến lược barrier tại mức a: trả ngay mọi phần thặng dư vượt a.

    v_a(x) = W(x)/W'(a) khi x <= a, x - a + W(a)/W'(a) khi x > a, 0 khi x < 0.

    Attributes:
        level: Mức barrier a >= 0
        scale_function: Scale function của mô hình
    """
    level: float
    scale_function: ScaleFunction
    slope_at_level: float = field(init=False)

    def __post_init__(self):
        a = self.level
        if not (isinstance(a, (int, float, np.floating)) and math.isfinite(a)) or a < 0:
            raise DomainError(f"barrier a phải hữu hạn và >= 0, nhận {a}")
        slope = self.scale_function.eval(float(a), 1)
        if not slope > 0:
            raise DomainError(f"W'(a) phải dương tại a={a}, nhận {slope}")
        object.__setattr__(self, 'slope_at_level', float(slope))

    @property
    def model(self):
        return self.scale_function.model

    @property
    def value_at_level(self) -> float:
        """v_a(a) = W(a)/W'(a)."""
        return self.scale_function.eval(float(self.level), 0) / self.slope_at_level

    def value(self, x):
        """v_a(x), vô hướng hoặc mảng."""
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        a = self.level
        below = flat <= a
        out = np.empty(flat.shape)
        out[below] = self.scale_function.eval(flat[below], 0) / self.slope_at_level
        out[~below] = flat[~below] - a + self.value_at_level
        out[flat < 0] = 0.0
        return float(out[0]) if arr.ndim == 0 else out

    __call__ = value

    def derivative(self, x, order: int = 1, left: bool = True):
        """
        Đạo hàm bậc 1 hoặc 2 của v_a.

        Tại x = a dùng giới hạn trái khi left=True (v_a có thể không C² tại a).
        """
        if order not in (1, 2):
            raise DomainError(f"order phải là 1 hoặc 2, nhận {order}")
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        a = self.level
        below = (flat <= a) if left else (flat < a)
        out = np.zeros(flat.shape)
        out[below] = self.scale_function.eval(flat[below], order) / self.slope_at_level
        if order == 1:
            out[~below] = 1.0
        out[flat < 0] = 0.0
        return float(out[0]) if arr.ndim == 0 else out

    def to_dict(self) -> Dict[str, Any]:
        return {'barrier': self.level, 'w1_at_barrier': self.slope_at_level, 'value_at_barrier': self.value_at_level}


@dataclass
class OptimalityCertificate:
    """
    Kết quả kiểm tra điều kiện tối ưu của barrier a*.

    Attributes:
        a_star: Barrier ứng viên a*
        condition2_holds: W' không giảm trên [a*, x_hi] (theo lưới)
        convexity_holds: W' lồi trên (0, x_hi] theo lưới, trong dung sai convexity_tol
        worst_violation: Mức giảm lớn nhất của W' sau a*
        violation_x: Vị trí vi phạm lớn nhất (None nếu không có)
        grid_points: Số điểm lưới kiểm tra điều kiện (2)
        x_hi: Biên phải của lưới
        convexity_points: Số điểm lưới kiểm tra tính lồi
        convexity_worst: Giá trị chuẩn hóa nhỏ nhất của W''' (hoặc sai phân bậc 2 của W')
        convexity_x: Vị trí của giá trị đó
        convexity_tol: Dung sai: convexity_holds khi mọi giá trị chuẩn hóa > -convexity_tol
        convexity_strict: Mọi giá trị chuẩn hóa > 0 (lồi ngặt không cần dung sai)
        derivative_bound_holds: v_{a*}' >= 1 trên lưới
        completely_monotone: Cờ completely monotone của mật độ
        cm_verified: Cờ trên được suy ra giải tích
        representation: Dạng biểu diễn của scale function
    """
    a_star: float
    condition2_holds: bool
    convexity_holds: bool
    worst_violation: float = 0.0
    violation_x: Optional[float] = None
    grid_points: int = 0
    x_hi: float = 0.0
    convexity_points: int = 0
    convexity_worst: float = 0.0
    convexity_x: Optional[float] = None
    convexity_tol: float = 0.0
    convexity_strict: bool = False
    derivative_bound_holds: bool = True
    completely_monotone: bool = False
    cm_verified: bool = True
    representation: str = ""

    @property
    def consistent(self) -> bool:
        """convexity_holds kéo theo condition2_holds."""
        return self.condition2_holds or not self.convexity_holds

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary phẳng."""
        return {
            'a_star': self.a_star,
            'condition2_holds': self.condition2_holds,
            'convexity_holds': self.convexity_holds,
            'worst_violation': self.worst_violation,
            'violation_x': self.violation_x,
            'grid_points': self.grid_points,
            'x_hi': self.x_hi,
            'convexity_points': self.convexity_points,
            'convexity_worst': self.convexity_worst,
            'convexity_x': self.convexity_x,
            'convexity_tol': self.convexity_tol,
            'convexity_strict': self.convexity_strict,
            'derivative_bound_holds': self.derivative_bound_holds,
            'completely_monotone': self.completely_monotone,
            'cm_verified': self.cm_verified,
            'representation': self.representation,
        }
