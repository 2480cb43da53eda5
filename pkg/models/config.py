"""
Config Model - Model lưu trữ cấu hình tính toán.

Model này quản lý:
- Cài đặt scale function (lưới, nghịch đảo Laplace)
- Cài đặt tìm barrier và kiểm tra điều kiện tối ưu
- Cài đặt kiểm chứng HJB (quadrature)
- Cài đặt mô phỏng Monte Carlo
- Thư mục output và logs
"""

import os
import json
import logging
from typing import Optional, Dict, Any
from dataclasses import dataclass, field, asdict, fields

logger = logging.getLogger("barrierlab.config")

# Đường dẫn mặc định đến file config
DEFAULT_CONFIG_PATH = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    'config',
    'settings.json'
)

# Số khoảng lưới tối thiểu của bảng scale function
MIN_GRID = 64


def _from_known_keys(cls, data: Dict[str, Any], section: str):
    """Tạo dataclass từ dict, bỏ qua (và cảnh báo) các khóa lạ."""
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        logger.warning(f"Bỏ qua khóa không hỗ trợ trong {section}: {unknown}")
    return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class ScaleSettings:
    """
    Cài đặt tính scale function.

    Attributes:
        n_grid: Số khoảng lưới khi lập bảng
        x_max: Biên phải lưới (None = tự chọn)
        interpolation_order: Bậc spline nội suy
        inversion_degree: Bậc M của thuật toán de Hoog
        inversion_tol: Sai số mục tiêu dùng để chọn abscissa Bromwich
        residual_tol: Ngưỡng sai lệch giữa hai bậc nghịch đảo
        max_degree_escalations: Số lần tăng bậc khi không hội tụ
        confluent_tol: Khoảng cách tương đối coi là nghiệm trùng
        conditioning_tol: Khoảng cách tương đối phát cảnh báo điều kiện kém
    """
    n_grid: int = 2048
    x_max: Optional[float] = None
    interpolation_order: int = 5
    inversion_degree: int = 20
    inversion_tol: float = 1e-12
    residual_tol: float = 1e-7
    max_degree_escalations: int = 2
    confluent_tol: float = 1e-8
    conditioning_tol: float = 1e-4

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScaleSettings':
        """Tạo ScaleSettings từ dictionary."""
        return _from_known_keys(cls, data, 'scale_settings')


@dataclass
class BarrierSettings:
    """
    Cài đặt tìm a* và kiểm tra điều kiện (2) / tính lồi.

    Attributes:
        coarse_points: Số điểm lưới thô khi quét W'
        tie_rtol: Ngưỡng tương đối coi hai giá trị W' là bằng nhau
        refine_xatol: Sai số tuyệt đối khi tinh chỉnh a*
        monotone_tol: Ngưỡng vi phạm tính đơn điệu của W'
        convexity_points: Số điểm lưới kiểm tra tính lồi
        max_doublings: Số lần nhân đôi x_hi tối đa
    """
    coarse_points: int = 2048
    tie_rtol: float = 1e-9
    refine_xatol: float = 1e-8
    monotone_tol: float = 1e-9
    convexity_points: int = 512
    max_doublings: int = 12

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BarrierSettings':
        """Tạo BarrierSettings từ dictionary."""
        return _from_known_keys(cls, data, 'barrier_settings')


@dataclass
class VerificationSettings:
    """
    Cài đặt kiểm chứng HJB.

    Attributes:
        eps_factor: Ngưỡng bước nhảy nhỏ eps = eps_factor * min(1, x)
        quad_rtol: Sai số tương đối của quadrature thích nghi
        hjb_tol: Dung sai tương đối cho (Γ-q)v và 1-v'
        quad_limit: Số khoảng chia tối đa của quadrature
    """
    eps_factor: float = 1e-4
    quad_rtol: float = 1e-9
    hjb_tol: float = 1e-5
    quad_limit: int = 200

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'VerificationSettings':
        """Tạo VerificationSettings từ dictionary."""
        return _from_known_keys(cls, data, 'verification_settings')


@dataclass
class SimulationSettings:
    """
    Cài đặt mô phỏng Monte Carlo.

    Attributes:
        paths: Số đường mô phỏng
        seed: Seed gốc
        dt: Bước thời gian (None = 1/(20 λ))
        horizon: Chân trời thời gian (None = tự tính từ cận đuôi chiết khấu)
        target_stderr: Sai số chuẩn mục tiêu dùng để chọn horizon
        bridge_correction: Có dùng hiệu chỉnh Brownian bridge không
    """
    paths: int = 100000
    seed: int = 42
    dt: Optional[float] = None
    horizon: Optional[float] = None
    target_stderr: float = 1e-2
    bridge_correction: bool = True

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SimulationSettings':
        """Tạo SimulationSettings từ dictionary."""
        return _from_known_keys(cls, data, 'simulation_settings')


@dataclass
class OutputSettings:
    """
    Cài đặt output.

    Attributes:
        output_folder: Thư mục ghi CSV/JSON
        log_dir: Thư mục ghi log
    """
    output_folder: str = "./output"
    log_dir: str = "./logs"

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OutputSettings':
        """Tạo OutputSettings từ dictionary."""
        return _from_known_keys(cls, data, 'output_settings')


@dataclass
class Config:
    """
    Model lưu trữ cấu hình ứng dụng.

    Attributes:
        scale_settings: Cài đặt scale function
        barrier_settings: Cài đặt barrier
        verification_settings: Cài đặt kiểm chứng HJB
        simulation_settings: Cài đặt Monte Carlo
        output_settings: Cài đặt output
        config_path: Đường dẫn đến file config
    """
    scale_settings: ScaleSettings = field(default_factory=ScaleSettings)
    barrier_settings: BarrierSettings = field(default_factory=BarrierSettings)
    verification_settings: VerificationSettings = field(default_factory=VerificationSettings)
    simulation_settings: SimulationSettings = field(default_factory=SimulationSettings)
    output_settings: OutputSettings = field(default_factory=OutputSettings)
    config_path: str = DEFAULT_CONFIG_PATH

    _SECTIONS = {
        'scale_settings': ScaleSettings,
        'barrier_settings': BarrierSettings,
        'verification_settings': VerificationSettings,
        'simulation_settings': SimulationSettings,
        'output_settings': OutputSettings,
    }

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> 'Config':
        """
        Tải cấu hình từ file JSON.

        Args:
            config_path: Đường dẫn đến file config (tùy chọn)

        Returns:
            Config object với cấu hình đã tải
        """
        path = config_path or DEFAULT_CONFIG_PATH
        config = cls(config_path=path)

        if os.path.exists(path):
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
                for name, section_cls in cls._SECTIONS.items():
                    if name in data:
                        setattr(config, name, section_cls.from_dict(data[name]))
            except (json.JSONDecodeError, OSError, TypeError) as e:
                logger.warning(f"Lỗi đọc file config: {e}")

        return config

    def save(self) -> bool:
        """
        Lưu cấu hình vào file JSON.

        Returns:
            True nếu lưu thành công, False nếu thất bại
        """
        try:
            config_dir = os.path.dirname(self.config_path)
            if config_dir and not os.path.exists(config_dir):
                os.makedirs(config_dir, exist_ok=True)

            data = {name: getattr(self, name).to_dict() for name in self._SECTIONS}

            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=4, ensure_ascii=False)

            return True
        except OSError as e:
            logger.warning(f"Lỗi lưu file config: {e}")
            return False

    def validate(self) -> Dict[str, bool]:
        """
        Kiểm tra tính hợp lệ của cấu hình.

        Returns:
            Dictionary với kết quả kiểm tra cho từng phần
        """
        return {
            'scale_settings_valid': self._validate_scale_settings(),
            'barrier_settings_valid': self._validate_barrier_settings(),
            'verification_settings_valid': self._validate_verification_settings(),
            'simulation_settings_valid': self._validate_simulation_settings(),
        }

    def _validate_scale_settings(self) -> bool:
        """Kiểm tra cài đặt scale function."""
        s = self.scale_settings
        return (
            s.n_grid >= MIN_GRID and
            (s.x_max is None or s.x_max > 0) and
            s.interpolation_order in (3, 5) and
            s.inversion_degree >= 4 and
            0 < s.inversion_tol < 1 and
            s.residual_tol > 0
        )

    def _validate_barrier_settings(self) -> bool:
        """Kiểm tra cài đặt barrier."""
        s = self.barrier_settings
        return s.coarse_points >= 2048 and s.refine_xatol > 0 and s.convexity_points >= 16

    def _validate_verification_settings(self) -> bool:
        """Kiểm tra cài đặt HJB."""
        s = self.verification_settings
        return 0 < s.eps_factor < 1 and s.quad_rtol > 0 and s.hjb_tol > 0 and s.quad_limit >= 50

    def _validate_simulation_settings(self) -> bool:
        """Kiểm tra cài đặt Monte Carlo."""
        s = self.simulation_settings
        return (
            s.paths >= 2 and
            0 <= s.seed < 2 ** 64 and
            (s.dt is None or s.dt > 0) and
            (s.horizon is None or s.horizon > 0) and
            s.target_stderr > 0
        )

    def is_ready(self) -> bool:
        """
        Kiểm tra cấu hình đã sẵn sàng để sử dụng chưa.

        Returns:
            True nếu mọi phần cấu hình đều hợp lệ
        """
        return all(self.validate().values())

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi Config thành dictionary."""
        data = {name: getattr(self, name).to_dict() for name in self._SECTIONS}
        data['config_path'] = self.config_path
        return data
