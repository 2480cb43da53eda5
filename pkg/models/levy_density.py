"""
Levy Density Model - Các họ mật độ Lévy của quá trình rủi ro spectrally negative.

Model này chứa:
- Lớp cơ sở LevyDensity với các phép tính số (quadrature) mặc định
- Các họ trong catalogue: exponential, erlang, hyperexponential, pareto,
  weibull, stable, tempered stable (gamma, inverse Gaussian), custom
- Cờ completely monotone khai báo giải tích theo từng họ

Quy ước: μ(y) là mật độ của độ đo Lévy ν trên (0, ∞), đã nhân với cường độ λ.
Với các họ hữu hạn hoạt động (finite activity) μ = λ f, f là mật độ của claim.
"""

import math
import warnings
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from utils.error_handler import DomainError, ModelSpecError

# Sai số quadrature cho các kiểm tra khả tích
INTEGRABILITY_TOL = 1e-9

FAMILIES = (
    'none', 'exponential', 'erlang', 'hyperexponential', 'pareto', 'weibull',
    'stable', 'tempered_stable', 'gamma_process', 'inverse_gaussian', 'custom'
)

# Mã họ claim cho bộ mô phỏng Monte Carlo
CLAIM_EXPONENTIAL = 1
CLAIM_ERLANG = 2
CLAIM_HYPEREXPONENTIAL = 3
CLAIM_PARETO = 4
CLAIM_WEIBULL = 5


def _quad(func, a: float, b: float, **kwargs) -> Tuple[float, float]:
    """scipy quad với dung sai chặt, không in IntegrationWarning."""
    kwargs.setdefault('epsabs', 1e-13)
    kwargs.setdefault('epsrel', 1e-11)
    kwargs.setdefault('limit', 200)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', integrate.IntegrationWarning)
        return integrate.quad(func, a, b, **kwargs)


def _as_array(theta) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(theta)
    return np.atleast_1d(arr), arr.ndim == 0


def _restore(values: np.ndarray, scalar: bool):
    return values[0] if scalar else values


class LevyDensity:
    """
    Lớp cơ sở cho mật độ Lévy μ trên (0, ∞).

    Các lớp con ghi đè những đại lượng có dạng đóng; phần còn lại tính bằng
    quadrature thích nghi.

    Attributes:
        family: Tag của họ mật độ
        params: Tham số của họ (theo ý nghĩa trong catalogue)
        completely_monotone: Mật độ có completely monotone không
        cm_verified: Cờ trên được suy ra giải tích (False = người dùng khẳng định)
    """

    family: str = 'custom'
    completely_monotone: bool = False
    cm_verified: bool = True
    closed_form_derivative: bool = False

    def __init__(self, params: Dict[str, Any]):
        self.params = dict(params)

    # ---- Các đại lượng cơ bản -------------------------------------------------

    def density(self, y):
        """Giá trị μ(y), vector hóa; trả 0 với y <= 0."""
        raise NotImplementedError

    @property
    def finite_activity(self) -> bool:
        """True khi ν(0, ∞) < ∞."""
        return math.isfinite(self.total_rate)

    @cached_property
    def total_rate(self) -> float:
        """ν(0, ∞) (cường độ λ), có thể là inf."""
        head, _ = _quad(self.density, 0.0, 1.0)
        tail, _ = _quad(self.density, 1.0, np.inf)
        total = head + tail
        return total if math.isfinite(total) else math.inf

    def tail(self, x: float) -> float:
        """ν(x, ∞) = ∫_x^∞ μ(y) dy."""
        value, _ = _quad(self.density, x, np.inf)
        return value

    def moment(self, a: float, b: float, power: float) -> float:
        """∫_a^b y^power μ(y) dy."""
        if b <= a:
            return 0.0
        value, _ = _quad(lambda y: y ** power * self.density(y), a, b)
        return value

    @cached_property
    def small_jump_mean(self) -> float:
        """∫_(0,1) y μ(y) dy, inf khi phân kỳ."""
        value, err = _quad(lambda y: y * self.density(y), 0.0, 1.0)
        if not math.isfinite(value) or err > 1e-6 * max(1.0, abs(value)):
            return math.inf
        return value

    def small_jump_second_moment(self, eps: float) -> float:
        """∫_(0,eps] y² μ(y) dy."""
        return self.moment(0.0, eps, 2.0)

    def small_jump_third_moment(self, eps: float) -> float:
        """∫_(0,eps] y³ μ(y) dy (dùng cho ước lượng phần dư Taylor)."""
        return self.moment(0.0, eps, 3.0)

    # ---- Laplace exponent ----------------------------------------------------

    def claim_transform(self, s):
        """
        E[e^{-sY}] của phân phối claim f = μ/λ (chỉ với finite activity).

        Tính bằng quadrature, chấp nhận s phức với Re s > 0.
        """
        arr, scalar = _as_array(s)
        out = np.empty(arr.shape, dtype=complex)
        for i, si in enumerate(arr.astype(complex)):
            out[i] = self._numeric_claim_transform(si)
        if not np.iscomplexobj(np.asarray(s)):
            out = out.real
        return _restore(out, scalar)

    def _numeric_claim_transform(self, s: complex) -> complex:
        rate = self.total_rate
        a, omega = s.real, s.imag
        split = 1.0
        if omega == 0.0:
            head, _ = _quad(lambda y: math.exp(-a * y) * self.density(y), 0.0, split)
            tail, _ = _quad(lambda y: math.exp(-a * y) * self.density(y), split, np.inf)
            return complex(head + tail) / rate

        def damped(y):
            return math.exp(-a * y) * self.density(y)

        re_head, _ = _quad(damped, 0.0, split, weight='cos', wvar=omega)
        im_head, _ = _quad(damped, 0.0, split, weight='sin', wvar=omega)
        re_tail, _ = _quad(damped, split, np.inf, weight='cos', wvar=omega)
        im_tail, _ = _quad(damped, split, np.inf, weight='sin', wvar=omega)
        return complex(re_head + re_tail, -(im_head + im_tail)) / rate

    def compensated_integral(self, theta):
        """
        J(θ) = ∫(1 - e^{-θy} - θy·1{y<1}) μ(y) dy, nhận θ thực hoặc phức.

        Khi đó ψ(θ) = γθ + σ²θ²/2 - J(θ).
        """
        if self.finite_activity:
            theta_arr = np.asarray(theta)
            return self.total_rate * (1.0 - self.claim_transform(theta_arr)) - theta_arr * self.small_jump_mean
        arr, scalar = _as_array(theta)
        out = np.empty(arr.shape, dtype=complex)
        for i, si in enumerate(arr.astype(complex)):
            out[i] = self._numeric_compensated_integral(si)
        if not np.iscomplexobj(np.asarray(theta)):
            out = out.real
        return _restore(out, scalar)

    def _numeric_compensated_integral(self, s: complex) -> complex:
        def head(part):
            def integrand(y):
                value = (1.0 - np.exp(-s * y) - s * y) * self.density(y)
                return value.real if part == 0 else value.imag
            return _quad(integrand, 0.0, 1.0)[0]

        def tail(part):
            def integrand(y):
                value = (1.0 - np.exp(-s * y)) * self.density(y)
                return value.real if part == 0 else value.imag
            return _quad(integrand, 1.0, np.inf)[0]

        return complex(head(0) + tail(0), head(1) + tail(1))

    def compensated_integral_derivative(self, theta: float) -> float:
        """J'(θ) = ∫(y e^{-θy} - y·1{y<1}) μ(y) dy với θ > 0 thực."""
        head, _ = _quad(lambda y: y * (math.exp(-theta * y) - 1.0) * self.density(y), 0.0, 1.0)
        tail, _ = _quad(lambda y: y * math.exp(-theta * y) * self.density(y), 1.0, np.inf)
        return head + tail

    def rational_form(self) -> Optional[Tuple[Polynomial, Polynomial]]:
        """
        (P, Q) với λ·E[e^{-uY}] = P(u)/Q(u) khi họ có dạng hữu tỉ, ngược lại None.
        """
        return None

    def claim_sampler(self) -> Optional[Tuple[int, np.ndarray]]:
        """(mã họ, tham số) cho bộ sinh claim Monte Carlo, None nếu không hỗ trợ."""
        return None

    def check_integrability(self) -> None:
        """
        Kiểm tra ∫(1 ∧ y²) μ(y) dy < ∞ bằng quadrature thích nghi.

        Raises:
            ModelSpecError: Nếu tích phân phân kỳ hoặc không hội tụ số
        """
        head, head_err = _quad(lambda y: y * y * self.density(y), 0.0, 1.0)
        tail, tail_err = _quad(self.density, 1.0, np.inf)
        total = head + tail
        if not math.isfinite(total) or head_err + tail_err > INTEGRABILITY_TOL * max(1.0, total) * 1e3:
            raise ModelSpecError(
                f"∫(1 ∧ x²) ν(dx) không hội tụ (giá trị={total}, sai số={head_err + tail_err})",
                field='params'
            )
        if np.any(np.asarray(self.density(np.geomspace(1e-6, 1e3, 64))) < 0):
            raise ModelSpecError("mật độ phải không âm", field='params')

    # ---- Serialization ------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary (khóa 'family' và 'params')."""
        return {'family': self.family, 'params': dict(self.params)}

    def describe(self) -> Dict[str, Any]:
        """Metadata cho báo cáo."""
        return {
            'family': self.family,
            'finite_activity': self.finite_activity,
            'completely_monotone': self.completely_monotone,
            'cm_verified': self.cm_verified,
            'total_rate': self.total_rate,
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.params})"


class NoJumps(LevyDensity):
    """Không có bước nhảy (chuyển động Brown có drift)."""

    family = 'none'
    completely_monotone = True
    closed_form_derivative = True

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        super().__init__(params or {})

    def density(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    @cached_property
    def total_rate(self) -> float:
        return 0.0

    @property
    def finite_activity(self) -> bool:
        return True

    def tail(self, x: float) -> float:
        return 0.0

    def moment(self, a: float, b: float, power: float) -> float:
        return 0.0

    @cached_property
    def small_jump_mean(self) -> float:
        return 0.0

    def claim_transform(self, s):
        return np.ones_like(np.asarray(s))

    def compensated_integral(self, theta):
        return np.zeros_like(np.asarray(theta))

    def compensated_integral_derivative(self, theta: float) -> float:
        return 0.0

    def rational_form(self):
        return Polynomial([0.0]), Polynomial([1.0])

    def check_integrability(self) -> None:
        return None


class ExponentialDensity(LevyDensity):
    """μ(y) = λ β e^{-βy}."""

    family = 'exponential'
    completely_monotone = True
    closed_form_derivative = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.beta = float(params['beta'])

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, self.rate * self.beta * np.exp(-self.beta * np.maximum(y, 0.0)), 0.0)

    @cached_property
    def total_rate(self) -> float:
        return self.rate

    def tail(self, x: float) -> float:
        return self.rate * math.exp(-self.beta * x)

    @cached_property
    def small_jump_mean(self) -> float:
        b = self.beta
        return self.rate * (1.0 - math.exp(-b) * (1.0 + b)) / b

    def claim_transform(self, s):
        s = np.asarray(s)
        return self.beta / (self.beta + s)

    def compensated_integral_derivative(self, theta: float) -> float:
        return self.rate * self.beta / (self.beta + theta) ** 2 - self.small_jump_mean

    def rational_form(self):
        return Polynomial([self.rate * self.beta]), Polynomial([self.beta, 1.0])

    def claim_sampler(self):
        return CLAIM_EXPONENTIAL, np.array([self.beta])


class ErlangDensity(LevyDensity):
    """μ(y) = λ α^n y^{n-1} e^{-αy} / (n-1)!  (Erlang(n, α) claims)."""

    family = 'erlang'
    closed_form_derivative = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.alpha = float(params['alpha'])
        shape = params.get('shape', 2)
        if float(shape) != int(shape) or int(shape) < 1:
            raise ModelSpecError("shape phải là số nguyên >= 1", field='params.shape')
        self.shape = int(shape)
        self.params['shape'] = self.shape
        # Erlang(1, α) là phân phối mũ
        self.completely_monotone = self.shape == 1

    def density(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)
        n, a = self.shape, self.alpha
        values = self.rate * a ** n * yp ** (n - 1) * np.exp(-a * yp) / math.factorial(n - 1)
        return np.where(y > 0, values, 0.0)

    @cached_property
    def total_rate(self) -> float:
        return self.rate

    def tail(self, x: float) -> float:
        ax = self.alpha * x
        terms = sum(ax ** k / math.factorial(k) for k in range(self.shape))
        return self.rate * math.exp(-ax) * terms

    @cached_property
    def small_jump_mean(self) -> float:
        n, a = self.shape, self.alpha
        return self.rate * n / a * special.gammainc(n + 1, a)

    def claim_transform(self, s):
        s = np.asarray(s)
        return (self.alpha / (self.alpha + s)) ** self.shape

    def compensated_integral_derivative(self, theta: float) -> float:
        n, a = self.shape, self.alpha
        return self.rate * n * a ** n / (a + theta) ** (n + 1) - self.small_jump_mean

    def rational_form(self):
        q_poly = Polynomial([self.alpha, 1.0]) ** self.shape
        return Polynomial([self.rate * self.alpha ** self.shape]), q_poly

    def claim_sampler(self):
        return CLAIM_ERLANG, np.array([self.alpha, float(self.shape)])


class HyperexponentialDensity(LevyDensity):
    """μ(y) = λ Σ A_j β_j e^{-β_j y}, Σ A_j = 1."""

    family = 'hyperexponential'
    completely_monotone = True
    closed_form_derivative = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.weights = np.asarray(params['weights'], dtype=float)
        self.rates = np.asarray(params['rates'], dtype=float)
        if self.weights.shape != self.rates.shape or self.weights.ndim != 1 or self.weights.size == 0:
            raise ModelSpecError("weights và rates phải là hai danh sách cùng độ dài", field='params')
        if np.any(self.weights <= 0) or np.any(self.rates <= 0):
            raise ModelSpecError("weights và rates phải dương", field='params')
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ModelSpecError("tổng weights phải bằng 1", field='params.weights')
        self.params['weights'] = self.weights.tolist()
        self.params['rates'] = self.rates.tolist()

    def density(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.maximum(y, 0.0)[..., None]
        values = self.rate * np.sum(self.weights * self.rates * np.exp(-self.rates * yp), axis=-1)
        return np.where(y > 0, values, 0.0)

    @cached_property
    def total_rate(self) -> float:
        return self.rate

    def tail(self, x: float) -> float:
        return float(self.rate * np.sum(self.weights * np.exp(-self.rates * x)))

    @cached_property
    def small_jump_mean(self) -> float:
        b = self.rates
        return float(self.rate * np.sum(self.weights * (1.0 - np.exp(-b) * (1.0 + b)) / b))

    def claim_transform(self, s):
        s = np.asarray(s)
        return np.sum(self.weights * self.rates / (self.rates + s[..., None]), axis=-1)

    def compensated_integral_derivative(self, theta: float) -> float:
        b = self.rates
        return float(self.rate * np.sum(self.weights * b / (b + theta) ** 2)) - self.small_jump_mean

    def rational_form(self):
        factors = [Polynomial([b, 1.0]) for b in self.rates]
        q_poly = Polynomial([1.0])
        for f in factors:
            q_poly = q_poly * f
        p_poly = Polynomial([0.0])
        for j, (a_j, b_j) in enumerate(zip(self.weights, self.rates)):
            term = Polynomial([self.rate * a_j * b_j])
            for k, f in enumerate(factors):
                if k != j:
                    term = term * f
            p_poly = p_poly + term
        return p_poly, q_poly

    def claim_sampler(self):
        k = self.weights.size
        return CLAIM_HYPEREXPONENTIAL, np.concatenate([[float(k)], self.weights, self.rates])


class ParetoDensity(LevyDensity):
    """μ(y) = λ α (1+y)^{-α-1}."""

    family = 'pareto'
    completely_monotone = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.alpha = float(params['alpha'])

    def density(self, y):
        y = np.asarray(y, dtype=float)
        values = self.rate * self.alpha * (1.0 + np.maximum(y, 0.0)) ** (-self.alpha - 1.0)
        return np.where(y > 0, values, 0.0)

    @cached_property
    def total_rate(self) -> float:
        return self.rate

    def tail(self, x: float) -> float:
        return self.rate * (1.0 + x) ** (-self.alpha)

    def claim_sampler(self):
        return CLAIM_PARETO, np.array([self.alpha])


class WeibullDensity(LevyDensity):
    """μ(y) = λ c r y^{r-1} e^{-c y^r}; completely monotone khi 0 < r <= 1."""

    family = 'weibull'

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.c = float(params['c'])
        self.r = float(params['r'])
        self.completely_monotone = self.r <= 1.0

    def density(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.where(y > 0, y, 1.0)
        values = self.rate * self.c * self.r * yp ** (self.r - 1.0) * np.exp(-self.c * yp ** self.r)
        return np.where(y > 0, values, 0.0)

    @cached_property
    def total_rate(self) -> float:
        return self.rate

    def tail(self, x: float) -> float:
        return self.rate * math.exp(-self.c * x ** self.r)

    @cached_property
    def small_jump_mean(self) -> float:
        # ∫_0^1 y f(y) dy = c^{-1/r} γ(1 + 1/r, c)
        k = 1.0 + 1.0 / self.r
        return self.rate * self.c ** (-1.0 / self.r) * special.gamma(k) * special.gammainc(k, self.c)

    def _numeric_claim_transform(self, s: complex) -> complex:
        # Đổi biến u = c y^r khử điểm kỳ dị tại 0: E e^{-sY} = ∫ e^{-u} e^{-s (u/c)^{1/r}} du
        inv_r = 1.0 / self.r

        def part(kind):
            def integrand(u):
                value = np.exp(-u - s * (u / self.c) ** inv_r)
                return value.real if kind == 0 else value.imag
            return _quad(integrand, 0.0, np.inf)[0]

        if s.imag == 0.0:
            return complex(part(0), 0.0)
        return complex(part(0), part(1))

    def claim_sampler(self):
        return CLAIM_WEIBULL, np.array([self.c, self.r])


class StableDensity(LevyDensity):
    """μ(y) = λ y^{-1-α}, α ∈ (0, 2), α ≠ 1."""

    family = 'stable'
    completely_monotone = True
    closed_form_derivative = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.alpha = float(params['alpha'])
        if not (0.0 < self.alpha < 2.0) or self.alpha == 1.0:
            raise ModelSpecError("alpha phải thuộc (0, 2) và khác 1", field='params.alpha')
        self._gamma_neg = special.gamma(-self.alpha)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.where(y > 0, y, 1.0)
        return np.where(y > 0, self.rate * yp ** (-1.0 - self.alpha), 0.0)

    @cached_property
    def total_rate(self) -> float:
        return math.inf

    def tail(self, x: float) -> float:
        return self.rate * x ** (-self.alpha) / self.alpha

    @cached_property
    def small_jump_mean(self) -> float:
        return self.rate / (1.0 - self.alpha) if self.alpha < 1.0 else math.inf

    def moment(self, a: float, b: float, power: float) -> float:
        if b <= a:
            return 0.0
        k = power - self.alpha
        if k == 0.0:
            return self.rate * math.log(b / a)
        if a == 0.0 and k < 0:
            return math.inf
        return self.rate * (b ** k - a ** k) / k

    def small_jump_second_moment(self, eps: float) -> float:
        return self.rate * eps ** (2.0 - self.alpha) / (2.0 - self.alpha)

    def small_jump_third_moment(self, eps: float) -> float:
        return self.rate * eps ** (3.0 - self.alpha) / (3.0 - self.alpha)

    def compensated_integral(self, theta):
        theta = np.asarray(theta)
        a = self.alpha
        powered = np.power(theta.astype(complex), a) if np.iscomplexobj(theta) else np.power(theta, a)
        return -self.rate * self._gamma_neg * powered + self.rate * theta / (a - 1.0)

    def compensated_integral_derivative(self, theta: float) -> float:
        a = self.alpha
        return -self.rate * self._gamma_neg * a * theta ** (a - 1.0) + self.rate / (a - 1.0)

    def check_integrability(self) -> None:
        return None


class TemperedStableDensity(LevyDensity):
    """
    μ(y) = λ y^{-1-α} e^{-βy}, α ∈ [-1, 2).

    α = 0 là gamma process, α = 1/2 là inverse Gaussian; α < 0 là finite activity.
    """

    family = 'tempered_stable'
    completely_monotone = True
    closed_form_derivative = True

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        self.rate = float(params['lam'])
        self.alpha = float(params['alpha'])
        self.beta = float(params['beta'])
        if not (-1.0 <= self.alpha < 2.0):
            raise ModelSpecError("alpha phải thuộc [-1, 2)", field='params.alpha')
        # M = ∫_1^∞ y^{-α} e^{-βy} dy
        self._upper_mean, _ = _quad(lambda y: y ** (-self.alpha) * math.exp(-self.beta * y), 1.0, np.inf)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        yp = np.where(y > 0, y, 1.0)
        values = self.rate * yp ** (-1.0 - self.alpha) * np.exp(-self.beta * yp)
        return np.where(y > 0, values, 0.0)

    @cached_property
    def total_rate(self) -> float:
        if self.alpha < 0:
            return self.rate * self.beta ** self.alpha * special.gamma(-self.alpha)
        return math.inf

    def tail(self, x: float) -> float:
        if self.alpha < 0:
            return self.total_rate * special.gammaincc(-self.alpha, self.beta * x)
        return super().tail(x)

    @cached_property
    def small_jump_mean(self) -> float:
        if self.alpha >= 1.0:
            return math.inf
        k = 1.0 - self.alpha
        return self.rate * self.beta ** (-k) * special.gamma(k) * special.gammainc(k, self.beta)

    def small_jump_second_moment(self, eps: float) -> float:
        k = 2.0 - self.alpha
        return self.rate * self.beta ** (-k) * special.gamma(k) * special.gammainc(k, self.beta * eps)

    def small_jump_third_moment(self, eps: float) -> float:
        k = 3.0 - self.alpha
        return self.rate * self.beta ** (-k) * special.gamma(k) * special.gammainc(k, self.beta * eps)

    def _centered_transform(self, theta):
        """K(θ) = ∫(e^{-θy} - 1 + θy) y^{-1-α} e^{-βy} dy."""
        a, b = self.alpha, self.beta
        if a == 0.0:
            return -np.log1p(theta / b) + theta / b
        if a == 1.0:
            return (b + theta) * np.log1p(theta / b) - theta
        return special.gamma(-a) * ((b + theta) ** a - b ** a - a * b ** (a - 1.0) * theta)

    def _centered_transform_derivative(self, theta: float) -> float:
        a, b = self.alpha, self.beta
        if a == 0.0:
            return -1.0 / (b + theta) + 1.0 / b
        if a == 1.0:
            return math.log1p(theta / b)
        return special.gamma(-a) * a * ((b + theta) ** (a - 1.0) - b ** (a - 1.0))

    def compensated_integral(self, theta):
        theta = np.asarray(theta)
        if np.iscomplexobj(theta):
            theta = theta.astype(complex)
        return self.rate * (-self._centered_transform(theta) + theta * self._upper_mean)

    def compensated_integral_derivative(self, theta: float) -> float:
        return self.rate * (-self._centered_transform_derivative(theta) + self._upper_mean)

    def claim_transform(self, s):
        # Chỉ có nghĩa khi α < 0 (finite activity)
        s = np.asarray(s)
        return 1.0 - (self.compensated_integral(s) + s * self.small_jump_mean) / self.total_rate

    def check_integrability(self) -> None:
        return None


class GammaProcessDensity(TemperedStableDensity):
    """μ(y) = λ y^{-1} e^{-βy} (tempered stable với α = 0)."""

    family = 'gamma_process'

    def __init__(self, params: Dict[str, Any]):
        super().__init__({'lam': params['lam'], 'alpha': 0.0, 'beta': params['beta']})
        self.params = {'lam': float(params['lam']), 'beta': float(params['beta'])}


class InverseGaussianDensity(TemperedStableDensity):
    """μ(y) = λ y^{-3/2} e^{-βy} (tempered stable với α = 1/2)."""

    family = 'inverse_gaussian'

    def __init__(self, params: Dict[str, Any]):
        super().__init__({'lam': params['lam'], 'alpha': 0.5, 'beta': params['beta']})
        self.params = {'lam': float(params['lam']), 'beta': float(params['beta'])}


class CustomDensity(LevyDensity):
    """
    Mật độ do người dùng cung cấp dạng bảng.

    Nội suy tuyến tính trong thang log-log giữa các điểm lưới; dưới điểm đầu
    tiên kéo dài bằng lũy thừa theo độ dốc của hai điểm đầu; trên điểm cuối
    μ(y) ~ y^{-1-tail_exponent}. Cờ completely monotone do người dùng khẳng
    định và được ghi nhận là chưa kiểm chứng.
    """

    family = 'custom'
    cm_verified = False

    def __init__(self, params: Dict[str, Any]):
        super().__init__(params)
        grid = np.asarray(params.get('grid', []), dtype=float)
        values = np.asarray(params.get('values', []), dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
            raise ModelSpecError("grid và values phải là hai danh sách cùng độ dài (>= 2)", field='params')
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ModelSpecError("grid phải dương và tăng ngặt", field='params.grid')
        if np.any(values <= 0):
            raise ModelSpecError("values phải dương", field='params.values')
        self.tail_exponent = float(params['tail_exponent'])
        if self.tail_exponent <= 0:
            raise ModelSpecError("tail_exponent phải dương", field='params.tail_exponent')
        self.completely_monotone = bool(params.get('completely_monotone', False))
        self._log_grid = np.log(grid)
        self._log_values = np.log(values)
        self._head_slope = (self._log_values[1] - self._log_values[0]) / (self._log_grid[1] - self._log_grid[0])
        self.params['grid'] = grid.tolist()
        self.params['values'] = values.tolist()
        self.check_integrability()

    def density(self, y):
        y = np.asarray(y, dtype=float)
        log_y = np.log(np.where(y > 0, y, 1.0))
        inner = np.interp(log_y, self._log_grid, self._log_values)
        head = self._log_values[0] + self._head_slope * (log_y - self._log_grid[0])
        tail = self._log_values[-1] - (1.0 + self.tail_exponent) * (log_y - self._log_grid[-1])
        log_mu = np.where(log_y < self._log_grid[0], head, np.where(log_y > self._log_grid[-1], tail, inner))
        return np.where(y > 0, np.exp(log_mu), 0.0)

    @cached_property
    def total_rate(self) -> float:
        if self._head_slope <= -1.0:
            return math.inf
        return super().total_rate

    @cached_property
    def small_jump_mean(self) -> float:
        if self._head_slope <= -2.0:
            return math.inf
        return super().small_jump_mean

    def check_integrability(self) -> None:
        if self._head_slope <= -3.0:
            raise ModelSpecError("mật độ không khả tích với y² gần 0", field='params.values')
        super().check_integrability()


_FAMILY_CLASSES = {
    'none': NoJumps,
    'exponential': ExponentialDensity,
    'erlang': ErlangDensity,
    'hyperexponential': HyperexponentialDensity,
    'pareto': ParetoDensity,
    'weibull': WeibullDensity,
    'stable': StableDensity,
    'tempered_stable': TemperedStableDensity,
    'gamma_process': GammaProcessDensity,
    'inverse_gaussian': InverseGaussianDensity,
    'custom': CustomDensity,
}

# Tham số bắt buộc / tùy chọn theo họ
_REQUIRED_PARAMS: Dict[str, Sequence[str]] = {
    'none': (),
    'exponential': ('lam', 'beta'),
    'erlang': ('lam', 'alpha'),
    'hyperexponential': ('lam', 'weights', 'rates'),
    'pareto': ('lam', 'alpha'),
    'weibull': ('lam', 'c', 'r'),
    'stable': ('lam', 'alpha'),
    'tempered_stable': ('lam', 'alpha', 'beta'),
    'gamma_process': ('lam', 'beta'),
    'inverse_gaussian': ('lam', 'beta'),
    'custom': ('grid', 'values', 'tail_exponent'),
}
_OPTIONAL_PARAMS: Dict[str, Sequence[str]] = {
    'erlang': ('shape',),
    'custom': ('completely_monotone',),
}
# Tham số được phép <= 0 (còn lại phải là số thực dương)
_SIGNED_PARAMS = {('tempered_stable', 'alpha')}


def build_density(family: str, params: Optional[Dict[str, Any]] = None) -> LevyDensity:
    """
    Tạo LevyDensity từ tag họ và tham số, kiểm tra tham số chặt chẽ.

    Args:
        family: Tag của họ (xem FAMILIES)
        params: Dictionary tham số

    Returns:
        LevyDensity tương ứng

    Raises:
        ModelSpecError: Họ không tồn tại, thiếu/thừa tham số hoặc tham số sai
    """
    params = dict(params or {})
    if family not in _FAMILY_CLASSES:
        raise ModelSpecError(f"họ '{family}' không được hỗ trợ (hỗ trợ: {', '.join(FAMILIES)})", field='family')

    required = _REQUIRED_PARAMS[family]
    allowed = set(required) | set(_OPTIONAL_PARAMS.get(family, ()))
    missing = [name for name in required if name not in params]
    unknown = sorted(set(params) - allowed)
    if missing:
        raise ModelSpecError(f"thiếu tham số {missing}", field='params')
    if unknown:
        raise ModelSpecError(f"tham số không hỗ trợ {unknown}", field='params')

    for name, value in params.items():
        if isinstance(value, (list, tuple, bool)) or name in ('grid', 'values'):
            continue
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ModelSpecError(f"phải là số thực, nhận {value!r}", field=f'params.{name}')
        if not math.isfinite(number):
            raise ModelSpecError("phải hữu hạn", field=f'params.{name}')
        if (family, name) not in _SIGNED_PARAMS and number <= 0:
            raise ModelSpecError("phải dương", field=f'params.{name}')

    return _FAMILY_CLASSES[family](params)


def supported_families() -> List[str]:
    """Danh sách tag họ được hỗ trợ."""
    return list(FAMILIES)


def levy_tail(density: LevyDensity, x: float) -> float:
    """
    ν(x, ∞) với x > 0.

    Raises:
        DomainError: Nếu x <= 0
    """
    if not x > 0:
        raise DomainError(f"levy_tail yêu cầu x > 0, nhận x={x}")
    return float(density.tail(float(x)))
