"""
Reports Model - Cấu hình và kết quả của kiểm chứng HJB và mô phỏng Monte Carlo.

Model này chứa:
- GeneratorQuadrature: tham số quadrature cho toán tử Γ
- VerificationReport: giá trị (Γ - q)v và 1 - v' trên lưới cùng các verdict
- SimConfig / SimResult: cấu hình và kết quả mô phỏng barrier
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from models.levy_model import LevyModel
from utils.error_handler import DomainError, SimulationError


@dataclass(frozen=True)
class GeneratorQuadrature:
    """
    Tham số tính tích phân bước nhảy của Γ.

    Attributes:
        eps_factor: ε = eps_factor·min(1, x) là ngưỡng bước nhảy nhỏ
        rtol: Sai số tương đối của quadrature thích nghi
        limit: Số khoảng chia tối đa
        eps: Ngưỡng cố định (ghi đè eps_factor nếu khác None)
    """
    eps_factor: float = 1e-4
    rtol: float = 1e-9
    limit: int = 200
    eps: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.eps_factor < 1:
            raise DomainError(f"eps_factor phải thuộc (0, 1), nhận {self.eps_factor}")
        if not self.rtol > 0:
            raise DomainError(f"rtol phải dương, nhận {self.rtol}")

    def cutoff(self, x: float) -> float:
        """ε tại điểm x; luôn < 1 và < x."""
        eps = self.eps if self.eps is not None else self.eps_factor * min(1.0, x)
        if not (0 < eps < 1 and eps < x):
            raise DomainError(f"ε={eps} phải thuộc (0, min(1, x)) với x={x}")
        return eps

    def split_points(self, x: float, barrier: Optional[float] = None, start: Optional[float] = None) -> List[float]:
        """
        Các điểm chia (ε, x - a, 1, x) của đoạn (ε, x) và điểm cuối x.

        Tích phân trên (0, ∞) được chia thành (0, ε], các đoạn giữa các điểm này,
        và [x, ∞) (v = 0 trên số âm nên không có sai số cắt đuôi). Với start
        (ví dụ 0 khi mật độ khả tích), đoạn bắt đầu tại start thay cho ε.
        """
        begin = self.cutoff(x) if start is None else start
        points = {begin, x}
        if x > 1.0 and begin < 1.0:
            points.add(1.0)
        if barrier is not None and 0 < barrier < x and begin < x - barrier:
            points.add(x - barrier)
        return sorted(points)

    def halved(self) -> 'GeneratorQuadrature':
        """Bộ tham số với ε và rtol giảm một nửa (kiểm tra hội tụ)."""
        eps = self.eps / 2.0 if self.eps is not None else None
        return GeneratorQuadrature(self.eps_factor / 2.0, self.rtol / 2.0, self.limit, eps)

    def to_dict(self) -> Dict[str, Any]:
        return {'eps_factor': self.eps_factor, 'quad_rtol': self.rtol, 'quad_limit': self.limit, 'eps': self.eps}


@dataclass
class VerificationReport:
    """
    Kết quả kiểm chứng HJB cho một chiến lược barrier.

    Attributes:
        barrier: Mức barrier a
        x: Lưới điểm kiểm tra
        generator: (Γ - q)v_a(x)
        one_minus_vprime: 1 - v_a'(x)
        values: v_a(x)
        tolerance: Dung sai tương đối hjb_tol
        quadrature: Tham số quadrature đã dùng
        quad_error: Ước lượng sai số quadrature lớn nhất
        interior_residual: max |(Γ - q)v|/(1 + |v|) trên (0, a)
        interior_holds: interior_residual <= tolerance
        condition3_holds: (Γ - q)v <= tol·(1 + |v|) trên (a, x_hi]
        condition3_worst: Giá trị chuẩn hóa lớn nhất của (Γ - q)v trên (a, x_hi]
        condition3_x: Vị trí của giá trị đó
        derivative_holds: 1 - v' <= tolerance trên lưới
        hjb_holds: Verdict HJB = (Γ - q)v <= tol và 1 - v' <= tol mọi điểm
        warnings: Cảnh báo (ví dụ bậc 3 suy giảm độ chính xác)
    """
    barrier: float
    x: np.ndarray
    generator: np.ndarray
    one_minus_vprime: np.ndarray
    values: np.ndarray
    tolerance: float
    quadrature: GeneratorQuadrature
    quad_error: float = 0.0
    interior_residual: float = 0.0
    interior_holds: bool = True
    condition3_holds: bool = True
    condition3_worst: float = 0.0
    condition3_x: Optional[float] = None
    derivative_holds: bool = True
    hjb_holds: bool = True
    warnings: List[str] = field(default_factory=list)

    def normalized(self) -> np.ndarray:
        """(Γ - q)v / (1 + |v|)."""
        return self.generator / (1.0 + np.abs(self.values))

    def rows(self) -> List[List[float]]:
        """Các hàng x, gen_minus_q_v, one_minus_vprime."""
        return [[float(a), float(b), float(c)] for a, b, c in zip(self.x, self.generator, self.one_minus_vprime)]

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary phẳng (không gồm mảng)."""
        data = {
            'barrier': self.barrier,
            'grid_points': int(len(self.x)),
            'x_min': float(self.x[0]) if len(self.x) else None,
            'x_max': float(self.x[-1]) if len(self.x) else None,
            'tolerance': self.tolerance,
            'quad_error': self.quad_error,
            'interior_residual': self.interior_residual,
            'interior_holds': self.interior_holds,
            'condition3_holds': self.condition3_holds,
            'condition3_worst': self.condition3_worst,
            'condition3_x': self.condition3_x,
            'derivative_holds': self.derivative_holds,
            'hjb_holds': self.hjb_holds,
            'warnings': list(self.warnings),
        }
        data.update(self.quadrature.to_dict())
        return data


@dataclass(frozen=True)
class SimConfig:
    """
    Cấu hình mô phỏng Monte Carlo cho barrier a.

    Attributes:
        model: Mô hình finite activity
        barrier: Mức barrier a >= 0
        x: Thặng dư ban đầu
        paths: Số đường
        dt: Bước thời gian cho phần khuếch tán
        horizon: Chân trời T
        seed: Seed gốc (64-bit)
        bridge_correction: Hiệu chỉnh Brownian bridge khi kiểm tra phá sản
        target_stderr: Sai số chuẩn mục tiêu (chọn horizon)
    """
    model: LevyModel
    barrier: float
    x: float
    paths: int
    dt: float
    horizon: float
    seed: int = 42
    bridge_correction: bool = True
    target_stderr: float = 1e-2

    def __post_init__(self):
        if not self.model.finite_activity:
            raise SimulationError("mô phỏng chỉ hỗ trợ mô hình finite activity (ν(0,∞) < ∞)")
        if self.model.density.total_rate > 0 and self.model.density.claim_sampler() is None:
            raise SimulationError(f"họ '{self.model.density.family}' chưa có bộ sinh claim")
        if not (math.isfinite(self.barrier) and self.barrier >= 0):
            raise SimulationError(f"barrier phải hữu hạn và >= 0, nhận {self.barrier}")
        if not math.isfinite(self.x):
            raise SimulationError(f"x phải hữu hạn, nhận {self.x}")
        if int(self.paths) < 2:
            raise SimulationError(f"paths phải >= 2, nhận {self.paths}")
        if not (self.dt > 0 and self.horizon > 0):
            raise SimulationError("dt và horizon phải dương")
        rate = self.model.density.total_rate
        if rate > 0 and self.dt >= 1.0 / (10.0 * rate):
            raise SimulationError(f"dt={self.dt} phải < 1/(10 λ) = {1.0 / (10.0 * rate)}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise SimulationError(f"seed phải là số nguyên 64-bit không âm, nhận {self.seed}")

    @staticmethod
    def dividend_rate_bound(model: LevyModel) -> float:
        """Cận (heuristic) cho tốc độ trả cổ tức kỳ vọng: max(d, 0) + σ."""
        return max(model.drift, 0.0) + model.sigma

    @classmethod
    def auto_horizon(cls, model: LevyModel, target_stderr: float) -> float:
        """T sao cho e^{-qT}·rate/q = 0.1·target_stderr."""
        rate = max(cls.dividend_rate_bound(model), 1e-12)
        return max(math.log(rate / (model.q * 0.1 * target_stderr)) / model.q, 1.0)

    @staticmethod
    def auto_dt(model: LevyModel) -> float:
        """Δt = 1/(20 λ) (hoặc 0.01 khi không có bước nhảy)."""
        rate = model.density.total_rate
        return 1.0 / (20.0 * rate) if rate > 0 else 0.01

    @classmethod
    def create(
        cls,
        model: LevyModel,
        barrier: float,
        x: float,
        paths: int,
        seed: int = 42,
        dt: Optional[float] = None,
        horizon: Optional[float] = None,
        bridge_correction: bool = True,
        target_stderr: float = 1e-2
    ) -> 'SimConfig':
        """Tạo SimConfig, tự chọn dt và horizon khi không chỉ định."""
        return cls(
            model=model,
            barrier=float(barrier),
            x=float(x),
            paths=int(paths),
            dt=float(dt) if dt is not None else cls.auto_dt(model),
            horizon=float(horizon) if horizon is not None else cls.auto_horizon(model, target_stderr),
            seed=int(seed),
            bridge_correction=bridge_correction,
            target_stderr=target_stderr,
        )

    @property
    def tail_bound(self) -> float:
        """e^{-qT}·(cận tốc độ cổ tức)/q: phần giá trị bị cắt sau T."""
        return math.exp(-self.model.q * self.horizon) * self.dividend_rate_bound(self.model) / self.model.q

    def with_barrier(self, barrier: float) -> 'SimConfig':
        return SimConfig(self.model, float(barrier), self.x, self.paths, self.dt, self.horizon,
                         self.seed, self.bridge_correction, self.target_stderr)


@dataclass
class SimResult:
    """
    Kết quả ước lượng Monte Carlo của v_a(x).

    Attributes:
        estimate: Trung bình cổ tức chiết khấu
        stderr: Độ lệch chuẩn mẫu / √n
        paths: Số đường
        ruin_fraction: Tỉ lệ đường bị phá sản trước T
        seed: Seed gốc
        dt: Bước thời gian
        horizon: Chân trời T
        tail_bound: Cận phần giá trị bị cắt sau T
        bridge_correction: Có dùng hiệu chỉnh Brownian bridge không
        barrier: Mức barrier a
        x: Thặng dư ban đầu
    """
    estimate: float
    stderr: float
    paths: int
    ruin_fraction: float
    seed: int
    dt: float
    horizon: float
    tail_bound: float
    bridge_correction: bool
    barrier: float
    x: float

    @property
    def bias_notes(self) -> str:
        bridge = "bật" if self.bridge_correction else "tắt"
        return (f"hiệu chỉnh Brownian bridge {bridge}; dt={self.dt:.3g}; cổ tức giữa các bước "
                f"chiết khấu tại đầu bước (lệch lên tối đa O(q·dt)); "
                f"cắt tại T={self.horizon:.3g} (cận đuôi {self.tail_bound:.2e})")

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary phẳng."""
        return {
            'estimate': self.estimate,
            'stderr': self.stderr,
            'paths': self.paths,
            'seed': self.seed,
            'ruin_fraction': self.ruin_fraction,
            'dt': self.dt,
            'horizon': self.horizon,
            'tail_bound': self.tail_bound,
            'bridge_correction': self.bridge_correction,
            'barrier': self.barrier,
            'x': self.x,
            'bias_notes': self.bias_notes,
        }


@dataclass
class PolicyComparison:
    """
    Bảng so sánh v_a(x) ước lượng bằng Monte Carlo cho nhiều barrier.

    Attributes:
        rows: Mỗi hàng gồm barrier, estimate, stderr, closed_form (có thể None)
        x: Thặng dư ban đầu
        seed: Seed dùng chung cho mọi barrier
        paths: Số đường mỗi barrier
        a_star: Barrier ứng viên (None nếu không có)
        argmax: Barrier có ước lượng lớn nhất
        a_star_attains_max: estimate(a*) + 3·stderr(a*) >= max estimate
    """
    rows: List[Dict[str, Any]]
    x: float
    seed: int
    paths: int
    a_star: Optional[float] = None
    argmax: Optional[float] = None
    a_star_attains_max: Optional[bool] = None

    @classmethod
    def from_rows(
        cls,
        rows: List[Dict[str, Any]],
        x: float,
        seed: int,
        paths: int,
        a_star: Optional[float] = None
    ) -> 'PolicyComparison':
        """Tạo bảng, sắp xếp theo barrier và tính argmax."""
        rows = sorted(rows, key=lambda r: r['barrier'])
        best = max(rows, key=lambda r: r['estimate'])
        attains = None
        if a_star is not None:
            own = min(rows, key=lambda r: abs(r['barrier'] - a_star))
            attains = bool(own['estimate'] + 3.0 * own['stderr'] >= best['estimate'])
        return cls(rows=rows, x=float(x), seed=int(seed), paths=int(paths), a_star=a_star,
                   argmax=float(best['barrier']), a_star_attains_max=attains)

    def table(self) -> List[List[Any]]:
        """Các hàng barrier, mc_estimate, mc_stderr, closed_form."""
        return [[r['barrier'], r['estimate'], r['stderr'], r['closed_form']] for r in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': self.x,
            'seed': self.seed,
            'paths': self.paths,
            'a_star': self.a_star,
            'argmax': self.argmax,
            'a_star_attains_max': self.a_star_attains_max,
            'rows': [dict(r) for r in self.rows],
        }
