"""
Simulation Service - Mô phỏng Monte Carlo giá trị cổ tức chiết khấu dưới barrier.

Service này cung cấp:
- Mô phỏng quá trình Cramér-Lundberg (có hoặc không nhiễu Brown) phản xạ tại a
- Hiệu chỉnh Brownian bridge khi kiểm tra phá sản giữa các bước
- So sánh nhiều barrier với common random numbers

Mỗi đường dùng seed riêng sinh từ SeedSequence(seed), nên kết quả không phụ
thuộc thứ tự chạy song song.
"""

import math
import logging
from typing import Iterable, List, Optional

import numba
import numpy as np

from models.config import SimulationSettings
from models.levy_model import LevyModel
from models.policy import BarrierPolicy
from models.reports import PolicyComparison, SimConfig, SimResult
from utils.error_handler import SimulationError

logger = logging.getLogger("barrierlab.simulation_service")


@numba.njit(cache=True)
def _draw_claim(code, params):
    if code == 1:
        return np.random.exponential(1.0 / params[0])
    if code == 2:
        total = 0.0
        for _ in range(int(params[1])):
            total += np.random.exponential(1.0 / params[0])
        return total
    if code == 3:
        k = int(params[0])
        u = np.random.random()
        j = k - 1
        cumulative = 0.0
        for m in range(k):
            cumulative += params[1 + m]
            if u < cumulative:
                j = m
                break
        return np.random.exponential(1.0 / params[1 + k + j])
    if code == 4:
        u = 1.0 - np.random.random()
        return u ** (-1.0 / params[0]) - 1.0
    if code == 5:
        return (np.random.exponential(1.0) / params[0]) ** (1.0 / params[1])
    return 0.0


@numba.njit(cache=True)
def _simulate_path(x0, barrier, drift, sigma, q, rate, code, params, dt, horizon, bridge):
    u = x0
    t = 0.0
    paid = 0.0
    if u < 0.0:
        return paid, True
    if u > barrier:
        paid += u - barrier
        u = barrier
    next_jump = t + np.random.exponential(1.0 / rate) if rate > 0 else np.inf

    while t < horizon:
        if sigma == 0.0:
            # giữa hai bước nhảy quỹ đạo là tuyến tính
            t_next = min(next_jump, horizon)
            span = t_next - t
            reach = (barrier - u) / drift
            if reach < span:
                start = t + reach
                paid += drift * (math.exp(-q * start) - math.exp(-q * t_next)) / q
                u = barrier
            else:
                u += drift * span
            t = t_next
        else:
            step = min(dt, next_jump - t, horizon - t)
            z = np.random.standard_normal()
            crossing = np.random.random()
            u_new = u + drift * step + sigma * math.sqrt(step) * z
            if u_new < 0.0:
                return paid, True
            if bridge and crossing < math.exp(-2.0 * u * u_new / (sigma * sigma * step)):
                return paid, True
            if u_new > barrier:
                paid += (u_new - barrier) * math.exp(-q * t)
                u_new = barrier
            u = u_new
            t += step

        if t >= next_jump and t < horizon:
            u -= _draw_claim(code, params)
            if u < 0.0:
                return paid, True
            next_jump = t + np.random.exponential(1.0 / rate)

    return paid, False


@numba.njit(parallel=True, cache=True)
def _simulate_paths(seeds, x0, barrier, drift, sigma, q, rate, code, params, dt, horizon, bridge):
    n = seeds.size
    payout = np.zeros(n)
    ruined = np.zeros(n, dtype=np.bool_)
    for i in numba.prange(n):
        np.random.seed(seeds[i])
        payout[i], ruined[i] = _simulate_path(x0, barrier, drift, sigma, q, rate, code, params, dt, horizon, bridge)
    return payout, ruined


def path_seeds(seed: int, paths: int) -> np.ndarray:
    """
    Seed 32-bit của từng đường: hàm thuần của seed gốc và chỉ số đường.

    Khóa 32-bit từ SeedSequence(seed) được cộng vào chỉ số đường rồi đi qua
    hàm trộn song ánh trên uint32, nên các đường luôn có seed khác nhau.
    """
    key = np.random.SeedSequence(int(seed)).generate_state(1, dtype=np.uint32)[0]
    h = np.arange(int(paths), dtype=np.uint32) + key
    h ^= h >> np.uint32(16)
    h *= np.uint32(0x85EBCA6B)
    h ^= h >> np.uint32(13)
    h *= np.uint32(0xC2B2AE35)
    h ^= h >> np.uint32(16)
    return h


class SimulationService:
    """
    Service mô phỏng Monte Carlo.

    Class này cung cấp các phương thức để:
    - Tạo SimConfig từ cài đặt
    - Ước lượng v_a(x) bằng mô phỏng
    - So sánh các barrier với common random numbers
    """

    def __init__(self, settings: Optional[SimulationSettings] = None):
        """
        Khởi tạo SimulationService.

        Args:
            settings: Cài đặt mô phỏng (mặc định SimulationSettings())
        """
        self.settings = settings or SimulationSettings()

    def make_config(
        self,
        model: LevyModel,
        barrier: float,
        x: float,
        paths: Optional[int] = None,
        seed: Optional[int] = None,
        dt: Optional[float] = None
    ) -> SimConfig:
        """Tạo SimConfig, các giá trị thiếu lấy từ cài đặt."""
        s = self.settings
        return SimConfig.create(
            model=model,
            barrier=barrier,
            x=x,
            paths=paths if paths is not None else s.paths,
            seed=seed if seed is not None else s.seed,
            dt=dt if dt is not None else s.dt,
            horizon=s.horizon,
            bridge_correction=s.bridge_correction,
            target_stderr=s.target_stderr,
        )

    def simulate_barrier(self, cfg: SimConfig) -> SimResult:
        """
        Ước lượng v_a(x) = E_x[∫ e^{-qt} dL_t^a] đến khi phá sản.

        Args:
            cfg: Cấu hình mô phỏng

        Returns:
            SimResult với estimate, stderr = std(ddof=1)/√n
        """
        model = cfg.model
        sampler = model.density.claim_sampler()
        code, params = sampler if sampler is not None else (0, np.zeros(1))
        drift = model.drift
        if model.sigma == 0 and drift <= 0:
            raise SimulationError("drift phải dương khi σ = 0")

        payout, ruined = _simulate_paths(
            path_seeds(cfg.seed, cfg.paths), float(cfg.x), float(cfg.barrier), float(drift),
            float(model.sigma), float(model.q), float(model.density.total_rate), int(code),
            np.asarray(params, dtype=np.float64), float(cfg.dt), float(cfg.horizon), bool(cfg.bridge_correction)
        )

        n = cfg.paths
        estimate = float(np.sum(payout) / n)
        stderr = float(np.std(payout, ddof=1) / math.sqrt(n))
        result = SimResult(
            estimate=estimate,
            stderr=stderr,
            paths=n,
            ruin_fraction=float(np.count_nonzero(ruined) / n),
            seed=cfg.seed,
            dt=cfg.dt,
            horizon=cfg.horizon,
            tail_bound=cfg.tail_bound,
            bridge_correction=cfg.bridge_correction,
            barrier=cfg.barrier,
            x=cfg.x,
        )
        logger.info(f"simulate_barrier a={cfg.barrier:.6g} x={cfg.x:.6g}: {estimate:.6g} ± {stderr:.2g} (n={n})")
        return result

    def compare_policies(
        self,
        template: SimConfig,
        barriers: Iterable[float],
        a_star: Optional[float] = None,
        scale_function=None
    ) -> PolicyComparison:
        """
        Ước lượng v_a(x) cho từng barrier với cùng seed (common random numbers).

        Args:
            template: Cấu hình mẫu (barrier của nó bị thay thế)
            barriers: Danh sách barrier, khác rỗng
            a_star: Barrier ứng viên; được thêm vào danh sách nếu chưa có
            scale_function: Nếu có, thêm cột giá trị công thức đóng

        Returns:
            PolicyComparison
        """
        levels: List[float] = [float(a) for a in barriers]
        if not levels:
            raise SimulationError("danh sách barrier rỗng")
        if a_star is not None and not any(abs(a - a_star) <= 1e-12 * max(1.0, a_star) for a in levels):
            levels.append(float(a_star))

        rows = []
        for a in levels:
            result = self.simulate_barrier(template.with_barrier(a))
            closed_form = None
            if scale_function is not None:
                closed_form = BarrierPolicy(a, scale_function).value(template.x)
            rows.append({'barrier': a, 'estimate': result.estimate, 'stderr': result.stderr,
                         'closed_form': closed_form})

        return PolicyComparison.from_rows(rows, a_star=a_star, x=template.x, seed=template.seed, paths=template.paths)
