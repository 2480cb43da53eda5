"""
Presets - Các mô hình dựng sẵn (ví dụ Erlang có nhiễu Brown và catalogue mật độ).

Mỗi preset là một dictionary theo đúng schema file mô hình, nên
`--model <tên preset>` và `--model <file.json>` đi qua cùng một parser.
"""

import copy
import os
from typing import Any, Dict, List

from models.levy_model import LevyModel
from utils.error_handler import ModelSpecError

# Mô hình Cramér-Lundberg có nhiễu Brown, claims Erlang(2, α)
ERLANG_EXAMPLE = {'family': 'erlang', 'params': {'lam': 10.0, 'alpha': 1.0, 'shape': 2}, 'c': 21.4, 'q': 0.1}

PRESETS: Dict[str, Dict[str, Any]] = {
    'erlang_sigma_1_4': dict(ERLANG_EXAMPLE, sigma=1.4),
    'erlang_sigma_2': dict(ERLANG_EXAMPLE, sigma=2.0),
    # σ = 0: nghiệm tối ưu không phải barrier
    'erlang_sigma_0': dict(ERLANG_EXAMPLE, sigma=0.0),
    'exponential_cl': {
        'family': 'exponential', 'params': {'lam': 1.0, 'beta': 1.0}, 'c': 2.0, 'sigma': 0.0, 'q': 0.05,
    },
    'exponential_cl_brownian': {
        'family': 'exponential', 'params': {'lam': 1.0, 'beta': 1.0}, 'c': 2.0, 'sigma': 0.5, 'q': 0.05,
    },
    'hyperexponential_cl': {
        'family': 'hyperexponential',
        'params': {'lam': 1.0, 'weights': [0.5, 0.5], 'rates': [0.5, 2.0]},
        'c': 2.0, 'sigma': 0.0, 'q': 0.05,
    },
    'pareto_cl': {
        'family': 'pareto', 'params': {'lam': 1.0, 'alpha': 3.0}, 'c': 1.0, 'sigma': 0.0, 'q': 0.05,
    },
    'weibull_cl': {
        'family': 'weibull', 'params': {'lam': 1.0, 'c': 1.0, 'r': 0.5}, 'c': 3.0, 'sigma': 0.0, 'q': 0.05,
    },
    'stable': {
        'family': 'stable', 'params': {'lam': 1.0, 'alpha': 1.5}, 'gamma': 1.0, 'sigma': 0.0, 'q': 0.1,
    },
    'tempered_stable': {
        'family': 'tempered_stable', 'params': {'lam': 1.0, 'alpha': 1.5, 'beta': 1.0},
        'gamma': 1.0, 'sigma': 0.0, 'q': 0.1,
    },
    'gamma_process': {
        'family': 'gamma_process', 'params': {'lam': 1.0, 'beta': 1.0}, 'c': 2.0, 'sigma': 0.0, 'q': 0.1,
    },
    'inverse_gaussian': {
        'family': 'inverse_gaussian', 'params': {'lam': 1.0, 'beta': 1.0}, 'c': 3.0, 'sigma': 0.0, 'q': 0.1,
    },
    'brownian': {
        'family': 'none', 'params': {}, 'gamma': 1.0, 'sigma': 1.0, 'q': 0.5,
    },
}

# Các preset có mật độ completely monotone
COMPLETELY_MONOTONE_PRESETS = (
    'exponential_cl', 'exponential_cl_brownian', 'hyperexponential_cl', 'pareto_cl', 'weibull_cl',
    'stable', 'tempered_stable', 'gamma_process', 'inverse_gaussian', 'brownian',
)


def list_presets() -> List[str]:
    """Danh sách tên preset."""
    return sorted(PRESETS)


def preset_spec(name: str) -> Dict[str, Any]:
    """Bản sao dictionary đặc tả của preset."""
    if name not in PRESETS:
        raise ModelSpecError(f"preset '{name}' không tồn tại (có: {', '.join(list_presets())})", field='model')
    return copy.deepcopy(PRESETS[name])


def load_preset(name: str, **overrides) -> LevyModel:
    """
    Tạo LevyModel từ preset.

    Args:
        name: Tên preset
        **overrides: Ghi đè các khóa cấp cao (ví dụ sigma=0.5)

    Returns:
        LevyModel
    """
    spec = preset_spec(name)
    spec.update(overrides)
    return LevyModel.from_dict(spec, name=name)


def resolve_model(model_arg: str) -> LevyModel:
    """
    Giải quyết tham số --model: tên preset hoặc đường dẫn file JSON.

    Raises:
        ModelSpecError: Không phải preset và không phải file hợp lệ
    """
    if model_arg in PRESETS:
        return load_preset(model_arg)
    if os.path.exists(model_arg):
        return LevyModel.load(model_arg)
    raise ModelSpecError(
        f"'{model_arg}' không phải preset ({', '.join(list_presets())}) hay file tồn tại",
        field='model'
    )
