"""
Scale Function Model - Biểu diễn W^(q) và các đạo hàm đến bậc 3.

Hai dạng biểu diễn:
- exp_sum: W(x) = Σ D_j e^{θ_j x} (phân thức hữu tỉ)
- tabulated: bảng W_Φ(x) = e^{-Φx} W(x) và W_Φ'(x) trên lưới đều, nội suy spline
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import make_interp_spline

from models.levy_model import LevyModel
from utils.error_handler import DomainError, ExtrapolationError

logger = logging.getLogger("barrierlab.scale_function")

EXP_SUM = 'exp_sum'
TABULATED = 'tabulated'


@dataclass(frozen=True, eq=False)
class ScaleFunction:
    """
    q-scale function W^(q) của một LevyModel.

    Attributes:
        representation: 'exp_sum' hoặc 'tabulated'
        model: Mô hình sở hữu
        q: Lãi suất chiết khấu
        phi: Φ(q)
        roots: θ_j (exp_sum)
        residues: D_j (exp_sum)
        grid: Lưới x đều trên [0, x_max] (tabulated)
        tilted_values: W_Φ trên lưới (tabulated)
        tilted_derivative: W_Φ' trên lưới, phần tử đầu không dùng (tabulated)
        interpolation_order: Bậc spline
        warnings: Cảnh báo số học (nghiệm gần trùng, tăng bậc nghịch đảo...)
        inversion_residual: Sai lệch giữa hai bậc nghịch đảo (tabulated)
        inversion_degree: Bậc de Hoog đã dùng (tabulated)
    """
    representation: str
    model: LevyModel
    q: float
    phi: float
    roots: Optional[np.ndarray] = None
    residues: Optional[np.ndarray] = None
    grid: Optional[np.ndarray] = None
    tilted_values: Optional[np.ndarray] = None
    tilted_derivative: Optional[np.ndarray] = None
    interpolation_order: int = 5
    warnings: Tuple[str, ...] = field(default_factory=tuple)
    inversion_residual: float = float('nan')
    inversion_degree: int = 0

    def __post_init__(self):
        if self.representation not in (EXP_SUM, TABULATED):
            raise DomainError(f"representation không hợp lệ: {self.representation}")
        if self.representation == EXP_SUM and (self.roots is None or self.residues is None):
            raise DomainError("exp_sum cần roots và residues")
        if self.representation == TABULATED and (self.grid is None or self.tilted_values is None):
            raise DomainError("tabulated cần grid và tilted_values")

    # ---- Thuộc tính lưới ----------------------------------------------------

    @property
    def is_tabulated(self) -> bool:
        return self.representation == TABULATED

    @property
    def x_max(self) -> float:
        """Biên phải của bảng (inf với exp_sum)."""
        return float(self.grid[-1]) if self.is_tabulated else float('inf')

    @property
    def step(self) -> Optional[float]:
        """Bước lưới h = x_max / n_grid (None với exp_sum)."""
        return float(self.grid[1] - self.grid[0]) if self.is_tabulated else None

    @property
    def n_grid(self) -> int:
        return len(self.grid) - 1 if self.is_tabulated else 0

    @property
    def order3_degraded(self) -> bool:
        """Bậc 3 của bảng là sai phân hữu hạn O(h²)."""
        return self.is_tabulated

    @cached_property
    def _splines(self):
        k = self.interpolation_order
        nodes = self.grid[1:]
        values = make_interp_spline(nodes, self.tilted_values[1:], k=k)
        slopes = make_interp_spline(nodes, self.tilted_derivative[1:], k=k)
        return values, slopes, slopes.derivative()

    # ---- Đánh giá -----------------------------------------------------------

    def eval(self, x, order: int = 0):
        """
        W^(q) hoặc đạo hàm bậc `order` tại x (vô hướng hoặc mảng).

        x < 0 trả 0 với mọi bậc. Với bảng, đạo hàm tại x < h lấy tại x = h.

        Raises:
            DomainError: order ngoài {0, 1, 2, 3}
            ExtrapolationError: x > x_max với bảng
        """
        if order not in (0, 1, 2, 3):
            raise DomainError(f"order phải thuộc {{0,1,2,3}}, nhận {order}")
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        out = np.zeros(flat.shape)
        inside = flat >= 0
        if np.any(inside):
            if self.is_tabulated:
                out[inside] = self._eval_table(flat[inside], order)
            else:
                out[inside] = self._eval_exp_sum(flat[inside], order).real
        return float(out[0]) if arr.ndim == 0 else out

    __call__ = eval

    def eval_complex(self, x, order: int = 0) -> np.ndarray:
        """Tổng phức Σ D_j θ_j^order e^{θ_j x} (chỉ exp_sum), dùng kiểm tra phần ảo."""
        if self.is_tabulated:
            raise DomainError("eval_complex chỉ áp dụng cho exp_sum")
        return self._eval_exp_sum(np.atleast_1d(np.asarray(x, dtype=float)), order)

    def _eval_exp_sum(self, x: np.ndarray, order: int) -> np.ndarray:
        weights = self.residues * self.roots ** order
        return np.exp(np.outer(x, self.roots)) @ weights

    def _eval_table(self, x: np.ndarray, order: int) -> np.ndarray:
        h, x_max = self.step, self.x_max
        if np.any(x > x_max * (1.0 + 1e-12)):
            raise ExtrapolationError(
                f"x={float(np.max(x))} vượt quá x_max={x_max} của bảng scale function"
            )
        x = np.minimum(x, x_max)
        values, slopes, curvature = self._splines
        phi = self.phi

        if order == 0:
            out = np.exp(phi * x) * values(np.maximum(x, h))
            head = x < h
            if np.any(head):
                w0, wh = self.tilted_values[0], float(values(h)) * np.exp(phi * h)
                out[head] = w0 + (wh - w0) * x[head] / h
            return out

        if order == 3:
            # sai phân trung tâm của W'' với bước h
            xc = np.clip(x, 2.0 * h, x_max - h)
            return (self._eval_table(xc + h, 2) - self._eval_table(xc - h, 2)) / (2.0 * h)

        xe = np.maximum(x, h)
        w_t, w_t1 = values(xe), slopes(xe)
        growth = np.exp(phi * xe)
        if order == 1:
            return growth * (phi * w_t + w_t1)
        return growth * (phi * phi * w_t + 2.0 * phi * w_t1 + curvature(xe))

    @property
    def value_at_zero(self) -> float:
        """W^(q)(0)."""
        if self.is_tabulated:
            return float(self.tilted_values[0])
        return float(np.sum(self.residues).real)

    def tabulate(self, x_max: Optional[float] = None, n_grid: Optional[int] = None) -> Dict[str, Any]:
        """
        Bảng (x, W, W', W'', W''') trên lưới đều tăng dần.

        Cờ 'w3_degraded' đi kèm bảng: True khi cột w3 là sai phân trung tâm
        của W'' (bảng tabulated) thay vì giá trị giải tích.

        Args:
            x_max: Biên phải (mặc định x_max của bảng)
            n_grid: Số khoảng (mặc định n_grid của bảng)
        """
        if x_max is None:
            if not self.is_tabulated:
                raise DomainError("exp_sum cần x_max để lập bảng")
            x_max = self.x_max
        n_grid = n_grid or (self.n_grid if self.is_tabulated else 2048)
        x = np.linspace(0.0, float(x_max), int(n_grid) + 1)
        return {
            'x': x,
            'w': self.eval(x, 0),
            'w1': self.eval(x, 1),
            'w2': self.eval(x, 2),
            'w3': self.eval(x, 3),
            'w3_degraded': self.order3_degraded,
        }

    def describe(self) -> Dict[str, Any]:
        """Metadata của biểu diễn cho file sidecar."""
        info: Dict[str, Any] = {
            'representation': self.representation,
            'q': self.q,
            'phi': self.phi,
            'w_at_zero': self.value_at_zero,
            'warnings': list(self.warnings),
        }
        if self.is_tabulated:
            info.update({
                'x_max': self.x_max,
                'n_grid': self.n_grid,
                'step': self.step,
                'interpolation_order': self.interpolation_order,
                'inversion_degree': self.inversion_degree,
                'inversion_residual': self.inversion_residual,
                'order3_degraded': True,
            })
        else:
            info.update({
                'roots': [[float(r.real), float(r.imag)] for r in self.roots],
                'residues': [[float(d.real), float(d.imag)] for d in self.residues],
            })
        return info

    def __repr__(self) -> str:
        if self.is_tabulated:
            return f"ScaleFunction(tabulated, x_max={self.x_max}, n_grid={self.n_grid}, Φ={self.phi:.6g})"
        return f"ScaleFunction(exp_sum, {len(self.roots)} terms, Φ={self.phi:.6g})"
