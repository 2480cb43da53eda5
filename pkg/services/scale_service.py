"""
Scale Service - Service xây dựng và kiểm tra scale function W^(q).

Service này cung cấp:
- Phân thức hữu tỉ (nghiệm đa thức qua companion matrix) cho mô hình hữu tỉ
- Nghịch đảo Laplace số (de Hoog, Knight & Stokes) của biến đổi đã tilt
  θ ↦ 1/(ψ(θ + Φ(q)) - q), sau đó nhân với e^{Φ(q)x}
- Kiểm tra round-trip Laplace, tính đơn điệu và chế độ trơn tại 0
"""

import math
import logging
import warnings
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from models.config import MIN_GRID, ScaleSettings
from models.levy_model import LevyModel
from models.scale_function import EXP_SUM, TABULATED, ScaleFunction
from utils.error_handler import (
    ConfluentRootsError, ConvergenceError, DomainError, ErrorHandler,
    NonRationalModelError, ScaleFunctionError, get_error_handler
)

logger = logging.getLogger("barrierlab.scale_service")

# Số bậc cộng thêm khi ước lượng sai số nghịch đảo
CHECK_DEGREE_OFFSET = 4
# Độ lệch cho phép giữa nghiệm dương của đa thức và Φ(q)
PHI_MATCH_TOL = 1e-9
# Tốc độ κ của các số hạng e^{-κx} trừ khỏi W_Φ trước khi nghịch đảo
SUBTRACTION_RATE = 1.0


def dehoog_coefficients(fp: np.ndarray, degree: int) -> np.ndarray:
    """
    Hệ số liên phân số d_0..d_{2M} từ các giá trị F(p_k), k = 0..2M.

    Args:
        fp: Giá trị biến đổi tại các nút p_k = γ + iπk/T (ít nhất 2M+1 phần tử)
        degree: Bậc M

    Returns:
        Mảng phức d độ dài 2M+1
    """
    M = degree
    NP = 2 * M + 1
    fp = np.asarray(fp[:NP], dtype=np.complex128)

    e = np.zeros((NP + 1, M + 1), dtype=np.complex128)
    qd = np.zeros((NP + 1, M + 1), dtype=np.complex128)

    # bảng Q-D
    qd[0, 1] = fp[1] / (fp[0] / 2.0)
    qd[1:2 * M, 1] = fp[2:2 * M + 1] / fp[1:2 * M]
    for r in range(1, M + 1):
        count = 2 * (M - r) + 1
        e[0:count, r] = qd[1:count + 1, r] - qd[0:count, r] + e[1:count + 1, r - 1]
        if r < M:
            count = 2 * (M - r)
            qd[0:count, r + 1] = qd[1:count + 1, r] * e[1:count + 1, r] / e[0:count, r]

    d = np.zeros(NP, dtype=np.complex128)
    d[0] = fp[0] / 2.0
    for r in range(1, M + 1):
        d[2 * r - 1] = -qd[0, r]
        d[2 * r] = -e[0, r]
    return d


def dehoog_evaluate(d: np.ndarray, degree: int, times: np.ndarray, period: float, abscissa: float) -> np.ndarray:
    """
    Đánh giá xấp xỉ Padé đường chéo (quy tắc hình thang tăng tốc) tại các thời điểm.

    Args:
        d: Hệ số liên phân số từ dehoog_coefficients
        degree: Bậc M
        times: Các điểm t (cùng một khối, t <= period/2)
        period: T = 2·max(times)
        abscissa: Hoành độ Bromwich γ

    Returns:
        Giá trị nghịch đảo tại times
    """
    M = degree
    NP = 2 * M + 1
    times = np.asarray(times, dtype=float)
    z = np.exp(1j * np.pi * times / period)

    A = np.zeros((NP + 2, times.size), dtype=np.complex128)
    B = np.zeros((NP + 2, times.size), dtype=np.complex128)
    A[1] = d[0]
    B[0:2] = 1.0
    for i in range(1, 2 * M):
        A[i + 1] = A[i] + d[i] * A[i - 1] * z
        B[i + 1] = B[i] + d[i] * B[i - 1] * z

    # phần dư cải tiến của liên phân số
    brem = (1.0 + (d[2 * M - 1] - d[2 * M]) * z) / 2.0
    rem = -brem * (1.0 - np.sqrt(1.0 + d[2 * M] * z / brem ** 2))
    A[NP] = A[2 * M] + rem * A[2 * M - 1]
    B[NP] = B[2 * M] + rem * B[2 * M - 1]

    return np.exp(abscissa * times) / period * (A[NP] / B[NP]).real


def octave_blocks(x: np.ndarray, step: float) -> List[np.ndarray]:
    """Chia các điểm x > 0 thành khối [2^k h, 2^{k+1} h), trả về chỉ số mỗi khối."""
    level = np.floor(np.log2(x / step) + 1e-12).astype(int)
    return [np.flatnonzero(level == k) for k in np.unique(level)]


class ScaleService:
    """
    Service xây dựng scale function.

    Class này cung cấp các phương thức để:
    - Tính W^(q) dạng tổng mũ (partial_fractions)
    - Lập bảng W^(q) bằng nghịch đảo Laplace (numeric_inversion)
    - Chọn biểu diễn phù hợp với mô hình (build)
    - Kiểm tra các tính chất của W^(q)
    """

    def __init__(
        self,
        settings: Optional[ScaleSettings] = None,
        error_handler: Optional[ErrorHandler] = None
    ):
        """
        Khởi tạo ScaleService.

        Args:
            settings: Cài đặt scale function (mặc định ScaleSettings())
            error_handler: ErrorHandler dùng cho retry (mặc định singleton)
        """
        self.settings = settings or ScaleSettings()
        self.error_handler = error_handler or get_error_handler()

    # ---- Dạng tổng mũ ----------------------------------------------------------

    def partial_fractions(self, model: LevyModel) -> ScaleFunction:
        """
        W^(q)(x) = Σ D_j e^{θ_j x} với θ_j là nghiệm của (ψ(u) - q)·Q(u).

        Args:
            model: Mô hình có mật độ claim hữu tỉ

        Returns:
            ScaleFunction dạng exp_sum

        Raises:
            NonRationalModelError: Mô hình không hữu tỉ
            ConfluentRootsError: Có nghiệm trùng trong ngưỡng confluent_tol
            ScaleFunctionError: Nghiệm dương không khớp Φ(q)
        """
        form = model.density.rational_form()
        if form is None:
            raise NonRationalModelError(
                f"mật độ '{model.density.family}' không hữu tỉ; dùng numeric_inversion"
            )
        p_poly, q_poly = form
        q = model.q
        rate = model.density.total_rate
        linear = np.polynomial.Polynomial([-rate - q, model.drift, 0.5 * model.sigma ** 2])
        total = linear * q_poly + p_poly
        total = total.trim()
        total_deriv = total.deriv()

        roots = total.roots()
        roots = self._polish_roots(roots, total, q_poly)
        roots = self._symmetrize(roots)

        warnings_found = self._check_confluence(roots)

        residues = q_poly(roots) / total_deriv(roots)
        # cặp liên hợp cho phần dư liên hợp
        for j, root in enumerate(roots):
            if root.imag < 0:
                partner = int(np.argmin(np.abs(roots - np.conj(root))))
                residues[j] = np.conj(residues[partner])

        phi = model.phi()
        positive = [r.real for r in roots if r.imag == 0.0 and r.real > 0]
        if len(positive) != 1 or abs(positive[0] - phi) > PHI_MATCH_TOL * max(1.0, phi):
            raise ScaleFunctionError(
                f"nghiệm dương {positive} không khớp Φ(q)={phi}"
            )

        logger.debug(f"partial_fractions: {len(roots)} nghiệm, Φ={phi}")
        return ScaleFunction(
            representation=EXP_SUM,
            model=model,
            q=q,
            phi=phi,
            roots=roots,
            residues=residues,
            warnings=tuple(warnings_found),
        )

    @staticmethod
    def _polish_roots(roots: np.ndarray, total, q_poly) -> np.ndarray:
        """Một bước Newton trên ψ(u) - q = P(u)/Q(u) cho mỗi nghiệm."""
        total_deriv, q_deriv = total.deriv(), q_poly.deriv()
        polished = np.array(roots, dtype=complex)
        for j, u in enumerate(polished):
            p_val, q_val = total(u), q_poly(u)
            denom = total_deriv(u) * q_val - p_val * q_deriv(u)
            if denom == 0 or q_val == 0:
                continue
            candidate = u - p_val * q_val / denom
            if abs(total(candidate)) < abs(p_val):
                polished[j] = candidate
        return polished

    @staticmethod
    def _symmetrize(roots: np.ndarray) -> np.ndarray:
        """Nghiệm thực hóa phần ảo ~ 0, nghiệm phức ghép cặp liên hợp chính xác."""
        tol = 1e-12
        real = [complex(r.real, 0.0) for r in roots if abs(r.imag) <= tol * max(1.0, abs(r))]
        upper = [r for r in roots if r.imag > tol * max(1.0, abs(r))]
        ordered = sorted(real, key=lambda r: -r.real)
        for r in sorted(upper, key=lambda r: -r.real):
            ordered.extend([r, np.conj(r)])
        if len(ordered) != len(roots):
            # nghiệm phức không ghép cặp được: giữ nguyên
            return np.asarray(roots, dtype=complex)
        return np.asarray(ordered, dtype=complex)

    def _check_confluence(self, roots: np.ndarray) -> List[str]:
        found = []
        for j in range(len(roots)):
            for k in range(j + 1, len(roots)):
                scale = max(abs(roots[j]), abs(roots[k]))
                distance = abs(roots[j] - roots[k]) / scale
                if distance <= self.settings.confluent_tol:
                    raise ConfluentRootsError(
                        f"confluent roots unsupported: θ={roots[j]:.10g}, {roots[k]:.10g} "
                        f"(khoảng cách tương đối {distance:.2e})"
                    )
                if distance <= self.settings.conditioning_tol:
                    message = (
                        f"nghiệm gần trùng θ={roots[j]:.6g}, {roots[k]:.6g} "
                        f"(khoảng cách tương đối {distance:.2e}), D_j có thể kém chính xác"
                    )
                    logger.warning(message)
                    found.append(message)
        return found

    # ---- Dạng bảng -------------------------------------------------------

    @staticmethod
    def default_x_max(model: LevyModel) -> float:
        """x_max tự động: gấp đôi cận khởi đầu 4/Φ(q) + 10 của bài toán barrier."""
        return 2.0 * (4.0 / model.phi() + 10.0)

    def numeric_inversion(
        self,
        model: LevyModel,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None
    ) -> ScaleFunction:
        """
        Lập bảng W_Φ(q) trên lưới đều [0, x_max] bằng nghịch đảo de Hoog.

        Biến đổi của W_Φ là F(θ) = 1/(ψ(θ+Φ) - q). Cực tại θ = 0, bước nhảy W(0)
        và độ dốc W_Φ'(0+) được trừ trước (xem singular_part), chỉ phần còn lại g
        và g' được nghịch đảo. Hai bậc M và M+4 dùng chung các nút; residual là
        sai lệch giữa chúng chia cho độ lớn toàn cục của W_Φ và W_Φ'.
        Khi residual vượt residual_tol, bậc được tăng qua ErrorHandler.

        Args:
            model: Mô hình bất kỳ
            x_max: Biên phải (None = default_x_max)
            n_grid: Số khoảng lưới (None = settings.n_grid)

        Returns:
            ScaleFunction dạng tabulated

        Raises:
            DomainError: x_max <= 0 hoặc n_grid < MIN_GRID
            ConvergenceError: Không đạt residual_tol sau mọi lần tăng bậc
        """
        n_grid = int(n_grid if n_grid is not None else self.settings.n_grid)
        if x_max is None:
            x_max = self.settings.x_max or self.default_x_max(model)
        x_max = float(x_max)
        if not (x_max > 0 and math.isfinite(x_max)):
            raise DomainError(f"x_max phải dương, nhận {x_max}")
        if n_grid < MIN_GRID:
            raise DomainError(f"n_grid phải >= {MIN_GRID}, nhận {n_grid}")

        base = self.settings.inversion_degree
        step = 8
        attempts = [{'model': model, 'x_max': x_max, 'n_grid': n_grid, 'degree': base + step * i}
                    for i in range(self.settings.max_degree_escalations + 1)]
        escalations: List[str] = []

        def on_retry(attempt: int, error: Exception) -> None:
            escalations.append(f"tăng bậc nghịch đảo sau lần thử {attempt}: {error}")

        sf = self.error_handler.retry_with_escalation(
            self._invert, attempts, exceptions=(ConvergenceError,), on_retry=on_retry
        )
        if escalations:
            sf = replace(sf, warnings=sf.warnings + tuple(escalations))
        return sf

    @staticmethod
    def singular_part(model: LevyModel, phi: float) -> Tuple[float, float, float]:
        """
        Hệ số (c0, J, K) của phần được trừ khỏi W_Φ trước khi nghịch đảo.

        W_Φ(x) = c0 + J e^{-κx} + K x e^{-κx} + g(x) với g(0) = g'(0+) = 0:
        c0 = 1/ψ'(Φ) là thặng dư của cực tại θ = 0, J = W(0) - c0 và
        K = W_Φ'(0+) + κJ (K = 0 khi W'(0+) = ∞, phần còn lại chỉ có g(0) = 0).
        """
        c0 = 1.0 / model.laplace_exponent_derivative(phi)
        w_zero = 1.0 / model.drift if model.bounded_variation else 0.0
        jump = w_zero - c0
        if model.sigma > 0:
            w1_zero = 2.0 / model.sigma ** 2
        elif model.finite_activity:
            w1_zero = (model.total_rate + model.q) / model.drift ** 2
        else:
            return c0, jump, 0.0
        return c0, jump, w1_zero - phi * w_zero + SUBTRACTION_RATE * jump

    def _invert(self, model: LevyModel, x_max: float, n_grid: int, degree: int) -> ScaleFunction:
        phi = model.phi()
        q = model.q
        w_zero = 1.0 / model.drift if model.bounded_variation else 0.0
        c0, jump, kink = self.singular_part(model, phi)
        kappa = SUBTRACTION_RATE

        grid = np.linspace(0.0, x_max, n_grid + 1)
        h = grid[1]
        x = grid[1:]
        values = np.empty(n_grid)
        slopes = np.empty(n_grid)
        value_gaps = np.empty(n_grid)
        slope_gaps = np.empty(n_grid)
        check = degree + CHECK_DEGREE_OFFSET

        for block in octave_blocks(x, h):
            ts = x[block]
            period = 2.0 * ts.max()
            abscissa = -math.log(self.settings.inversion_tol) / (2.0 * period)
            nodes = abscissa + 1j * np.pi * np.arange(2 * check + 1) / period
            transform = 1.0 / (model.laplace_exponent_complex(nodes + phi) - q)
            if not np.all(np.isfinite(transform)):
                raise ConvergenceError("biến đổi Laplace không hữu hạn tại nút nghịch đảo", residual=math.inf)
            # biến đổi của g và g' (g(0) = 0)
            remainder = transform - c0 / nodes - jump / (nodes + kappa) - kink / (nodes + kappa) ** 2
            derivative_remainder = nodes * remainder

            for target, gaps, fp in ((values, value_gaps, remainder), (slopes, slope_gaps, derivative_remainder)):
                low = dehoog_evaluate(dehoog_coefficients(fp, degree), degree, ts, period, abscissa)
                high = dehoog_evaluate(dehoog_coefficients(fp, check), check, ts, period, abscissa)
                target[block] = high
                gaps[block] = np.abs(high - low)

        decay = np.exp(-kappa * x)
        values += c0 + (jump + kink * x) * decay
        slopes += (kink * (1.0 - kappa * x) - kappa * jump) * decay

        # sai lệch tuyệt đối so với độ lớn toàn cục của W_Φ và của W_Φ' (kể cả ΦW_Φ)
        value_scale = max(float(np.max(np.abs(values))), 1e-300)
        slope_scale = max(float(np.max(np.abs(slopes))), phi * value_scale, 1e-300)
        residual = max(float(np.max(value_gaps)) / value_scale, float(np.max(slope_gaps)) / slope_scale)

        if not math.isfinite(residual) or residual > self.settings.residual_tol:
            raise ConvergenceError(f"nghịch đảo Laplace bậc {degree} không hội tụ", residual=residual)

        sf_warnings = []
        if np.any(values <= 0) or np.any(np.diff(np.exp(phi * x) * values) <= 0):
            message = "W^(q) trên bảng không dương hoặc không tăng ngặt"
            logger.warning(message)
            sf_warnings.append(message)

        logger.debug(f"numeric_inversion: bậc {degree}, residual={residual:.3e}, x_max={x_max}, n={n_grid}")
        return ScaleFunction(
            representation=TABULATED,
            model=model,
            q=q,
            phi=phi,
            grid=grid,
            tilted_values=np.concatenate([[w_zero], values]),
            tilted_derivative=np.concatenate([[np.nan], slopes]),
            interpolation_order=self.settings.interpolation_order,
            warnings=tuple(sf_warnings),
            inversion_residual=residual,
            inversion_degree=degree,
        )

    def build(
        self,
        model: LevyModel,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None,
        representation: Optional[str] = None
    ) -> ScaleFunction:
        """
        Chọn biểu diễn: exp_sum khi mô hình hữu tỉ, ngược lại tabulated.

        Args:
            model: Mô hình
            x_max: Biên phải cho dạng bảng
            n_grid: Số khoảng lưới cho dạng bảng
            representation: Ép dùng 'exp_sum' hoặc 'tabulated'
        """
        if representation == TABULATED or (representation is None and not model.rational):
            return self.numeric_inversion(model, x_max, n_grid)
        return self.partial_fractions(model)

    # ---- Kiểm tra -------------------------------------------------------------

    def laplace_roundtrip(
        self,
        sf: ScaleFunction,
        thetas: Optional[Sequence[float]] = None,
        tail_tol: float = 1e-9
    ) -> Dict[str, Any]:
        """
        So sánh ∫_0^X e^{-θx} W(x) dx với 1/(ψ(θ) - q).

        X được chọn để cận đuôi e^{-(θ-Φ)X} W_Φ(X)/(θ-Φ) < tail_tol (giới hạn
        bởi x_max với dạng bảng).

        Returns:
            Dictionary với thetas, relative_errors, max_relative_error, tail_bounds
        """
        phi, model = sf.phi, sf.model
        if thetas is None:
            thetas = phi + np.geomspace(0.6, 11.5, 12)
        thetas = np.asarray(thetas, dtype=float)
        if np.any(thetas <= phi):
            raise DomainError("round-trip yêu cầu θ > Φ(q)")

        errors, bounds, horizons = [], [], []
        for theta in thetas:
            gap = theta - phi
            horizon, bound = self._roundtrip_horizon(sf, gap, tail_tol)
            with warnings.catch_warnings():
                warnings.simplefilter('ignore', integrate.IntegrationWarning)
                points = [sf.step] if sf.is_tabulated else None
                integral, _ = integrate.quad(
                    lambda y: math.exp(-theta * y) * sf.eval(y, 0), 0.0, horizon,
                    epsabs=0.0, epsrel=1e-11, limit=500, points=points
                )
            exact = 1.0 / (sf.model.laplace_exponent(theta) - model.q)
            errors.append(abs(integral - exact) / abs(exact))
            bounds.append(bound)
            horizons.append(horizon)

        return {
            'thetas': thetas.tolist(),
            'relative_errors': errors,
            'max_relative_error': float(max(errors)),
            'tail_bounds': bounds,
            'horizons': horizons,
        }

    @staticmethod
    def _roundtrip_horizon(sf: ScaleFunction, gap: float, tail_tol: float) -> Tuple[float, float]:
        def bound(X: float) -> float:
            tilted = sf.eval(X, 0) * math.exp(-sf.phi * X)
            return math.exp(-gap * X) * tilted / gap

        X = 10.0
        if sf.is_tabulated:
            X = min(X, sf.x_max)
            while bound(X) >= tail_tol and X < sf.x_max:
                X = min(2.0 * X, sf.x_max)
            return X, bound(X)
        while bound(X) >= tail_tol and X < 1e4:
            X *= 2.0
        return X, bound(X)

    def check_monotone(self, sf: ScaleFunction, x_hi: Optional[float] = None, points: int = 512) -> bool:
        """W^(q) dương và tăng ngặt trên lưới của (0, x_hi]."""
        x_hi = x_hi if x_hi is not None else (sf.x_max if sf.is_tabulated else 4.0 / sf.phi + 10.0)
        x = np.linspace(0.0, x_hi, points + 1)[1:]
        values = sf.eval(x, 0)
        return bool(np.all(values > 0) and np.all(np.diff(values) > 0))

    def smoothness_regime(self, sf: ScaleFunction, a_star: Optional[float] = None) -> Dict[str, Any]:
        """
        So sánh W(0+), W'(0+) với chế độ bounded/unbounded variation.

        Bounded variation: W(0+) = 1/d > 0. Unbounded variation: W(0+) = 0,
        W'(0+) = 2/σ² khi σ > 0. Với unbounded variation và a* > 0 còn báo W''(a*).

        Returns:
            Dictionary kết quả, khóa 'consistent' là verdict
        """
        model = sf.model
        bv = model.bounded_variation
        near_zero = sf.step if sf.is_tabulated else 1e-9
        w_zero = sf.eval(near_zero, 0) if sf.is_tabulated and not bv else sf.value_at_zero
        expected = 1.0 / model.drift if bv else 0.0
        if bv:
            consistent = abs(w_zero - expected) <= 1e-8 * max(1.0, expected) and w_zero > 0
        else:
            # W(0+) ≈ 0: W(h) phải nhỏ so với W(1)
            reference = abs(sf.eval(min(1.0, sf.x_max), 0))
            consistent = abs(sf.value_at_zero) <= 1e-8 * max(1.0, reference) and (
                not sf.is_tabulated or w_zero < 0.5 * reference
            )
        report: Dict[str, Any] = {
            'bounded_variation': bv,
            'w_at_zero': sf.value_at_zero,
            'expected_w_at_zero': expected,
            'w1_at_zero': sf.eval(near_zero, 1),
            'expected_w1_at_zero': (2.0 / model.sigma ** 2) if model.sigma > 0 else None,
            'consistent': bool(consistent),
        }
        if not bv and a_star is not None and a_star > 0:
            report['w2_at_a_star'] = sf.eval(a_star, 2)
        return report
