"""
Reproduction Controller - Controller tái tạo dữ liệu đồ thị của ví dụ Erlang(2).

Controller này điều khiển:
- Chạy tuần tự hai mô hình Erlang(2) (σ = 1.4 và σ = 2)
- Ghi bốn file CSV (đường W' và (Γ - q)v_{a*}) cùng summary.json
- Cập nhật tiến trình qua callback lên View
"""

import os
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from models.config import Config
from models.presets import load_preset
from services.barrier_service import BarrierService
from services.file_service import FileService
from services.hjb_service import HJBService
from services.scale_service import ScaleService
from utils.error_handler import ErrorHandler, ErrorSeverity, ExitCode, BarrierLabError, exit_code_for

# (preset, tiền tố file) theo thứ tự chạy
FIGURE_CASES = (
    ('erlang_sigma_1_4', 'fig1'),
    ('erlang_sigma_2', 'fig2'),
)

# Kết quả mong đợi của ví dụ Erlang(2): số thực ghi dạng (giá trị, sai số)
EXPECTED_VERDICTS = {
    'erlang_sigma_1_4': {'a_star': (0.4, 0.1), 'condition2_holds': False, 'hjb_holds': False},
    'erlang_sigma_2': {'a_star': (10.5, 0.1), 'condition2_holds': True, 'hjb_holds': True},
}

# Mã thoát (--strict) khi verdict lệch kết quả mong đợi
VERDICT_EXIT_CODES = {
    'a_star': ExitCode.CONDITION2,
    'condition2_holds': ExitCode.CONDITION2,
    'hjb_holds': ExitCode.HJB,
}

VERIFY_X_HI = 40.0
VERIFY_POINTS = 1000
W1_POINTS = 1001


def verdict_mismatches(case: Dict[str, Any]) -> List[Dict[str, Any]]:
    """So verdict của một mô hình với EXPECTED_VERDICTS, trả danh sách sai lệch."""
    mismatches = []
    for key, target in EXPECTED_VERDICTS.get(case['preset'], {}).items():
        actual = case.get(key)
        if isinstance(target, tuple):
            expected, tolerance = target
            matches = actual is not None and abs(actual - expected) <= tolerance
        else:
            expected, matches = target, actual == target
        if not matches:
            mismatches.append({'preset': case['preset'], 'verdict': key, 'expected': expected, 'actual': actual})
    return mismatches


class ReproductionState(Enum):
    """Enum trạng thái của Reproduction Controller."""
    IDLE = "idle"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class ReproductionController:
    """
    Controller tái tạo dữ liệu đồ thị.

    Class này chạy scale function, barrier và kiểm chứng HJB cho từng mô hình,
    ghi file và tổng hợp verdict.
    """

    def __init__(
        self,
        config: Config,
        error_handler: Optional[ErrorHandler] = None,
        log_callback: Optional[Callable[[str], None]] = None,
        progress_callback: Optional[Callable[[int, int, str], None]] = None,
        completion_callback: Optional[Callable[[bool, str], None]] = None
    ):
        """
        Khởi tạo ReproductionController.

        Args:
            config: Cấu hình ứng dụng
            error_handler: ErrorHandler ghi nhận lỗi
            log_callback: Callback ghi log (message)
            progress_callback: Callback cập nhật tiến trình (current, total, name)
            completion_callback: Callback khi hoàn thành (success, message)
        """
        self.config = config
        self.error_handler = error_handler
        self.log_callback = log_callback or (lambda x: print(x))
        self.progress_callback = progress_callback or (lambda c, t, n: None)
        self.completion_callback = completion_callback or (lambda s, m: None)

        self.scale_service = ScaleService(config.scale_settings, error_handler)
        self.barrier_service = BarrierService(config.barrier_settings)
        self.hjb_service = HJBService(config.verification_settings)
        self.file_service = FileService()

        self._state = ReproductionState.IDLE
        self.summary: Dict[str, Any] = {}

    @property
    def state(self) -> ReproductionState:
        return self._state

    def _log(self, message: str) -> None:
        self.log_callback(message)

    def run(self, out_dir: str, strict: bool = False) -> ExitCode:
        """
        Chạy toàn bộ và ghi file vào out_dir.

        Args:
            out_dir: Thư mục output
            strict: Trả mã khác 0 khi một verdict lệch EXPECTED_VERDICTS

        Returns:
            ExitCode.OK khi mọi bước tính toán thành công và (với strict) mọi
            verdict khớp kết quả mong đợi
        """
        self._state = ReproductionState.RUNNING
        self.file_service.create_folder(out_dir)
        cases: List[Dict[str, Any]] = []

        try:
            for index, (preset, prefix) in enumerate(FIGURE_CASES, start=1):
                self.progress_callback(index, len(FIGURE_CASES), preset)
                cases.append(self._run_case(preset, prefix, out_dir))
        except BarrierLabError as e:
            return self._fail(e, out_dir)

        mismatches = [m for case in cases for m in verdict_mismatches(case)]
        for mismatch in mismatches:
            self._log(f"{mismatch['preset']}: {mismatch['verdict']} = {mismatch['actual']}, "
                      f"mong đợi {mismatch['expected']}")
        self.summary = {'cases': cases, 'mismatches': mismatches}

        try:
            self.file_service.save_json(os.path.join(out_dir, 'summary.json'), self.summary)
        except BarrierLabError as e:
            return self._fail(e, out_dir)
        self._state = ReproductionState.COMPLETED
        self.completion_callback(True, f"Đã ghi {2 * len(cases)} file CSV và summary.json vào {out_dir}")

        if strict and mismatches:
            return VERDICT_EXIT_CODES[mismatches[0]['verdict']]
        return ExitCode.OK

    def _fail(self, error: BarrierLabError, out_dir: str) -> ExitCode:
        self._state = ReproductionState.FAILED
        if self.error_handler:
            self.error_handler.handle_error(error, "Tái tạo đồ thị thất bại", ErrorSeverity.ERROR,
                                            context={'out_dir': out_dir})
        self.completion_callback(False, str(error))
        return exit_code_for(error)

    def _run_case(self, preset: str, prefix: str, out_dir: str) -> Dict[str, Any]:
        model = load_preset(preset)
        self._log(f"{preset}: {model}")

        sf = self.scale_service.build(model)
        certificate = self.barrier_service.certify(sf)
        a_star = certificate.a_star
        self._log(f"{preset}: a* = {a_star:.6g}, điều kiện (2) {'đạt' if certificate.condition2_holds else 'không đạt'}")

        x_plot = max(3.0 * a_star, 5.0)
        x = np.linspace(0.0, x_plot, W1_POINTS)
        self.file_service.save_csv(
            os.path.join(out_dir, f"{prefix}_left_w1.csv"), ['x', 'w1'], list(zip(x, sf.eval(x, 1)))
        )

        policy = self.barrier_service.policy(sf, a_star)
        report = self.hjb_service.verify_hjb(model, policy, x_hi=VERIFY_X_HI)
        self.file_service.save_csv(
            os.path.join(out_dir, f"{prefix}_right_generator.csv"),
            ['x', 'gen_minus_q_v', 'one_minus_vprime'], report.rows()
        )
        above = report.x > a_star
        max_above = float(np.max(report.generator[above])) if np.any(above) else None
        self._log(f"{preset}: HJB {'đạt' if report.hjb_holds else 'không đạt'}, max (Γ-q)v trên (a*, 40] = {max_above}")

        return {
            'preset': preset,
            'sigma': model.sigma,
            'a_star': a_star,
            'condition2_holds': certificate.condition2_holds,
            'convexity_holds': certificate.convexity_holds,
            'derivative_bound_holds': certificate.derivative_bound_holds,
            'hjb_holds': report.hjb_holds,
            'interior_residual': report.interior_residual,
            'condition3_worst': report.condition3_worst,
            'condition3_x': report.condition3_x,
            'max_generator_above_barrier': max_above,
            'representation': sf.representation,
        }
