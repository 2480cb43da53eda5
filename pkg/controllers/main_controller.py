"""
Main Controller - Controller chính điều phối các lệnh của BarrierLab.

Controller này quản lý:
- Khởi tạo Services từ cấu hình
- Thực thi các lệnh scale, barrier, verify, simulate, reproduce-figures
- Ghi file kết quả và chuyển lỗi thành mã thoát
"""

import os
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from models.config import MIN_GRID, Config
from models.presets import resolve_model
from services.barrier_service import BarrierService
from services.file_service import FileService
from services.hjb_service import HJBService
from services.scale_service import ScaleService
from services.simulation_service import SimulationService
from controllers.reproduction_controller import ReproductionController, ReproductionState
from utils.error_handler import (
    BarrierLabError, DomainError, ErrorHandler, ErrorSeverity, ExitCode, OutputError,
    exit_code_for, set_error_handler
)

# Số điểm của bảng W' trong lệnh barrier
W1_POINTS = 2049


class MainController:
    """
    Controller chính của ứng dụng.

    Class này điều phối toàn bộ luồng hoạt động của ứng dụng,
    kết nối View với Model và Services.
    """

    def __init__(self, config: Optional[Config] = None):
        """
        Khởi tạo MainController.

        Args:
            config: Cấu hình (mặc định Config.load())
        """
        self.config = config or Config.load()

        log_dir = self.config.output_settings.log_dir or None
        self.error_handler = ErrorHandler(log_dir=log_dir, notification_callback=self._on_error)
        set_error_handler(self.error_handler)

        # Khởi tạo services
        self.file_service = FileService()
        self.scale_service = ScaleService(self.config.scale_settings, self.error_handler)
        self.barrier_service = BarrierService(self.config.barrier_settings)
        self.hjb_service = HJBService(self.config.verification_settings)
        self.simulation_service = SimulationService(self.config.simulation_settings)

        # View reference (sẽ được set từ main)
        self.view = None

    def set_view(self, view) -> None:
        """
        Đặt reference đến View.

        Args:
            view: ConsoleView instance
        """
        self.view = view

    def _log(self, message: str) -> None:
        if self.view:
            self.view.log(message)

    def _on_error(self, error_info) -> None:
        if self.view:
            self.view.show_error(error_info.message + (f": {error_info.exception}" if error_info.exception else ""))

    # ---- Khung thực thi --------------------------------------------------------

    def _execute(
        self,
        command: str,
        out_dir: str,
        func: Callable[[], Tuple[ExitCode, Dict[str, Any]]]
    ) -> int:
        """
        Chạy một lệnh, ghi <command>.json vào out_dir và trả mã thoát.
        """
        self.file_service.create_folder(out_dir)
        try:
            code, result = func()
        except BarrierLabError as e:
            code = exit_code_for(e)
            self.error_handler.handle_error(e, f"Lệnh {command} thất bại", ErrorSeverity.ERROR,
                                            context={'out_dir': out_dir})
            result = {'error': str(e), 'error_type': type(e).__name__}
            for key in ('field', 'path'):
                if getattr(e, key, None):
                    result[key] = getattr(e, key)

        document = {'command': command, 'exit_code': int(code)}
        document.update(result)
        result_path = os.path.join(out_dir, f"{command}.json")
        if not self.file_service.write_json(result_path, document):
            error = OutputError(f"không ghi được file kết quả {result_path}", path=result_path)
            self.error_handler.handle_error(error, f"Lệnh {command} thất bại", ErrorSeverity.ERROR)
            if code == ExitCode.OK:
                code = exit_code_for(error)
        if self.view and 'summary' in result:
            self.view.print_summary(command, result['summary'])
        return int(code)

    def _build_scale_function(self, model_arg: str, x_max: Optional[float], n_grid: Optional[int]):
        if x_max is not None and not x_max > 0:
            raise DomainError(f"--xmax phải dương, nhận {x_max}")
        if n_grid is not None and n_grid < MIN_GRID:
            raise DomainError(f"--grid phải >= {MIN_GRID}, nhận {n_grid}")
        model = resolve_model(model_arg)
        self._log(f"Mô hình: {model}")
        sf = self.scale_service.build(model, x_max=x_max, n_grid=n_grid)
        self._log(f"Scale function: {sf!r}")
        for warning in sf.warnings:
            if self.view:
                self.view.show_warning(warning)
        return model, sf

    # ---- Lệnh ----------------------------------------------------------------

    def run_scale(
        self,
        model_arg: str,
        out_dir: str,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None
    ) -> int:
        """
        Ghi bảng x,w,w1,w2,w3 vào scale.csv và metadata biểu diễn vào scale.json.

        Args:
            model_arg: Tên preset hoặc đường dẫn file mô hình
            out_dir: Thư mục output
            x_max: Biên phải (None = tự động)
            n_grid: Số khoảng lưới (None = theo cài đặt)
        """
        def task():
            model, sf = self._build_scale_function(model_arg, x_max, n_grid)
            upper = x_max if x_max is not None else (sf.x_max if sf.is_tabulated else self.scale_service.default_x_max(model))
            n = n_grid or self.config.scale_settings.n_grid
            table = sf.tabulate(upper, n)
            rows = list(zip(table['x'], table['w'], table['w1'], table['w2'], table['w3']))
            self.file_service.save_csv(os.path.join(out_dir, 'scale.csv'), ['x', 'w', 'w1', 'w2', 'w3'], rows)
            summary = {'representation': sf.representation, 'phi': sf.phi, 'x_max': float(upper), 'n_grid': n,
                       'w3_degraded': table['w3_degraded']}
            return ExitCode.OK, {'model': model.describe(), 'scale_function': sf.describe(), 'summary': summary}

        return self._execute('scale', out_dir, task)

    def run_barrier(
        self,
        model_arg: str,
        out_dir: str,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None,
        strict: bool = False
    ) -> int:
        """
        Tìm a*, kiểm tra điều kiện (2) và tính lồi; ghi barrier_w1.csv và barrier.json.

        Với strict: mã 10 khi điều kiện (2) thất bại, 11 khi tính lồi thất bại.
        """
        def task():
            model, sf = self._build_scale_function(model_arg, x_max, n_grid)
            certificate = self.barrier_service.certify(sf)
            smoothness = self.scale_service.smoothness_regime(sf, certificate.a_star)
            x = np.linspace(0.0, certificate.x_hi, W1_POINTS)
            self.file_service.save_csv(os.path.join(out_dir, 'barrier_w1.csv'), ['x', 'w1'],
                                        list(zip(x, sf.eval(x, 1))))

            code = ExitCode.OK
            if strict and not certificate.condition2_holds:
                code = ExitCode.CONDITION2
            elif strict and not certificate.convexity_holds:
                code = ExitCode.CONVEXITY
            summary = {
                'a_star': certificate.a_star,
                'condition2_holds': certificate.condition2_holds,
                'convexity_holds': certificate.convexity_holds,
                'derivative_bound_holds': certificate.derivative_bound_holds,
                'representation': sf.representation,
            }
            return code, {'model': model.describe(), 'certificate': certificate.to_dict(),
                          'smoothness': smoothness, 'summary': summary}

        return self._execute('barrier', out_dir, task)

    def run_verify(
        self,
        model_arg: str,
        out_dir: str,
        barrier: Optional[float] = None,
        x_hi: Optional[float] = None,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None,
        strict: bool = False
    ) -> int:
        """
        Kiểm chứng HJB cho barrier (mặc định a*); ghi verify.csv và verify.json.

        Với strict: mã 12 khi HJB thất bại.
        """
        def task():
            model, sf = self._build_scale_function(model_arg, x_max, n_grid)
            level = barrier if barrier is not None else self.barrier_service.optimal_barrier(sf)
            policy = self.barrier_service.policy(sf, level)
            self._log(f"Kiểm chứng HJB tại a = {level:.6g}")
            report = self.hjb_service.verify_hjb(model, policy, x_hi=x_hi)
            self.file_service.save_csv(os.path.join(out_dir, 'verify.csv'),
                                        ['x', 'gen_minus_q_v', 'one_minus_vprime'], report.rows())

            code = ExitCode.HJB if strict and not report.hjb_holds else ExitCode.OK
            summary = {
                'barrier': level,
                'hjb_holds': report.hjb_holds,
                'interior_residual': report.interior_residual,
                'condition3_worst': report.condition3_worst,
                'derivative_holds': report.derivative_holds,
            }
            return code, {'model': model.describe(), 'report': report.to_dict(), 'summary': summary}

        return self._execute('verify', out_dir, task)

    def run_simulate(
        self,
        model_arg: str,
        out_dir: str,
        x: Optional[float] = None,
        barrier: Optional[float] = None,
        barriers: Optional[Sequence[float]] = None,
        paths: Optional[int] = None,
        seed: Optional[int] = None,
        dt: Optional[float] = None,
        x_max: Optional[float] = None,
        n_grid: Optional[int] = None,
        strict: bool = False
    ) -> int:
        """
        Ước lượng v_a(x) bằng Monte Carlo và so với công thức đóng.

        x_max và n_grid áp dụng cho scale function của cột công thức đóng (khi
        mô hình cần bảng nghịch đảo số).

        Khi có danh sách barriers, ghi bảng so sánh simulate.csv. Với strict:
        mã 13 khi một ước lượng lệch công thức đóng quá 3 sai số chuẩn
        (cộng cận đuôi).
        """
        def task():
            model, sf = self._build_scale_function(model_arg, x_max, n_grid)
            a_star = self.barrier_service.optimal_barrier(sf)
            level = barrier if barrier is not None else a_star
            start = x if x is not None else level
            cfg = self.simulation_service.make_config(model, level, start, paths=paths, seed=seed, dt=dt)
            self._log(f"Mô phỏng {cfg.paths} đường, seed={cfg.seed}, dt={cfg.dt:.3g}, T={cfg.horizon:.3g}")

            if barriers:
                comparison = self.simulation_service.compare_policies(cfg, barriers, a_star=a_star, scale_function=sf)
                self.file_service.save_csv(os.path.join(out_dir, 'simulate.csv'),
                                            ['barrier', 'mc_estimate', 'mc_stderr', 'closed_form'], comparison.table())
                mismatched = [r['barrier'] for r in comparison.rows
                              if not _agrees(r['estimate'], r['stderr'], r['closed_form'], cfg.tail_bound)]
                summary = {
                    'seed': cfg.seed,
                    'a_star': a_star,
                    'argmax': comparison.argmax,
                    'a_star_attains_max': comparison.a_star_attains_max,
                    'mismatched_barriers': len(mismatched),
                }
                result = {'comparison': comparison.to_dict(), 'mismatched': mismatched}
            else:
                sim = self.simulation_service.simulate_barrier(cfg)
                closed_form = self.barrier_service.barrier_value(sf, level, start)
                agrees = _agrees(sim.estimate, sim.stderr, closed_form, sim.tail_bound)
                mismatched = [] if agrees else [level]
                summary = {
                    'seed': sim.seed,
                    'barrier': level,
                    'x': start,
                    'estimate': sim.estimate,
                    'stderr': sim.stderr,
                    'closed_form': closed_form,
                    'agrees': agrees,
                }
                result = {'simulation': sim.to_dict(), 'closed_form': closed_form, 'agrees': agrees}

            code = ExitCode.SIMULATION_MISMATCH if strict and mismatched else ExitCode.OK
            result.update({'model': model.describe(), 'scale_function': sf.describe(), 'summary': summary})
            return code, result

        return self._execute('simulate', out_dir, task)

    def run_reproduce_figures(self, out_dir: str, strict: bool = False) -> int:
        """
        Ghi bốn CSV đồ thị và summary.json; reproduce-figures.json tóm tắt verdict.

        Với strict: mã 10 (a*, điều kiện (2)) hoặc 12 (HJB) khi một verdict lệch
        kết quả mong đợi của ví dụ Erlang(2).
        """
        controller = ReproductionController(
            config=self.config,
            error_handler=self.error_handler,
            log_callback=self._log,
            progress_callback=self._on_progress,
            completion_callback=self._on_complete,
        )

        def task():
            code = controller.run(out_dir, strict=strict)
            if controller.state != ReproductionState.COMPLETED:
                return code, {'state': controller.state.value}
            summary = {'mismatches': len(controller.summary['mismatches'])}
            for case in controller.summary['cases']:
                tag = case['preset']
                summary[f"{tag}.a_star"] = case['a_star']
                summary[f"{tag}.condition2_holds"] = case['condition2_holds']
                summary[f"{tag}.hjb_holds"] = case['hjb_holds']
            return code, {'state': controller.state.value, 'cases': controller.summary['cases'],
                          'mismatches': controller.summary['mismatches'], 'summary': summary}

        return self._execute('reproduce-figures', out_dir, task)

    def _on_progress(self, current: int, total: int, name: str) -> None:
        if self.view:
            self.view.update_progress(current, total, name)

    def _on_complete(self, success: bool, message: str) -> None:
        self._log(message)


def _agrees(estimate: float, stderr: float, closed_form: Optional[float], tail_bound: float) -> bool:
    """|estimate - closed_form| <= 3·stderr + tail_bound."""
    if closed_form is None:
        return True
    return abs(estimate - closed_form) <= 3.0 * stderr + tail_bound
