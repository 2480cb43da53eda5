#!/usr/bin/env python3
"""
BarrierLab - Chiến lược cổ tức barrier tối ưu cho quá trình Lévy phổ âm.

Công cụ dòng lệnh tính scale function W^(q), tìm barrier ứng viên a*,
kiểm chứng điều kiện HJB, mô phỏng Monte Carlo và tái tạo dữ liệu đồ thị
cho ví dụ Erlang(2).

Phiên bản: 1.0.0
"""

import sys
import os
import argparse
from typing import List, Optional

# Thêm thư mục gốc vào path để import các module
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from controllers.main_controller import MainController
from models.config import MIN_GRID, Config
from models.presets import list_presets
from utils.error_handler import ExitCode
from views.console_view import ConsoleView


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"phải dương, nhận {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"phải >= 2, nhận {text}")
    return value


def _grid_size(text: str) -> int:
    value = int(text)
    if value < MIN_GRID:
        raise argparse.ArgumentTypeError(f"phải >= {MIN_GRID}, nhận {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed phải thuộc [0, 2^64), nhận {text}")
    return value


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"danh sách số thực cách nhau bởi dấu phẩy, nhận {text}")


def build_parser() -> argparse.ArgumentParser:
    """Tạo parser với các lệnh con và cờ dùng chung."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('--out', default=None, help="thư mục output (mặc định output_folder trong config)")
    shared.add_argument('--config', default=None, help="file settings.json")
    shared.add_argument('--strict', action='store_true', help="mã thoát khác 0 khi có verdict thất bại")
    shared.add_argument('--quiet', action='store_true', help="tắt log tiến trình")
    shared.add_argument('--seed', type=_seed, default=None, help="seed gốc cho Monte Carlo (mặc định 42)")
    shared.add_argument('--paths', type=_positive_int, default=None, help="số đường Monte Carlo (mặc định 100000)")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument('--model', required=True,
                             help=f"preset ({', '.join(list_presets())}) hoặc file JSON")
    model_flags.add_argument('--grid', type=_grid_size, default=None, help="số khoảng lưới (mặc định 2048)")
    model_flags.add_argument('--xmax', type=float, default=None, help="biên phải của lưới (mặc định tự động)")

    parser = argparse.ArgumentParser(prog='barrierlab', description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest='command', required=True)

    sub.add_parser('scale', parents=[shared, model_flags], help="lập bảng W, W', W'', W'''")
    sub.add_parser('barrier', parents=[shared, model_flags], help="tìm a* và kiểm tra điều kiện tối ưu")

    verify = sub.add_parser('verify', parents=[shared, model_flags], help="kiểm chứng HJB")
    verify.add_argument('--barrier', type=float, default=None, help="barrier a (mặc định a*)")
    verify.add_argument('--xhi', type=_positive_float, default=None, help="biên phải lưới kiểm chứng")

    simulate = sub.add_parser('simulate', parents=[shared, model_flags], help="mô phỏng Monte Carlo")
    simulate.add_argument('--barrier', type=float, default=None, help="barrier a (mặc định a*)")
    simulate.add_argument('--barriers', type=_float_list, default=None, help="so sánh nhiều barrier, ví dụ 1,5,10.5")
    simulate.add_argument('--x', type=float, default=None, help="thặng dư ban đầu (mặc định bằng barrier)")
    simulate.add_argument('--dt', type=_positive_float, default=None, help="bước thời gian (mặc định 1/(20 λ))")

    sub.add_parser('reproduce-figures', parents=[shared], help="ghi dữ liệu hai đồ thị Erlang(2)")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """
    Phân tích tham số và chạy lệnh.

    Returns:
        Mã thoát
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else int(ExitCode.USAGE)

    view = ConsoleView(quiet=args.quiet)
    if getattr(args, 'xmax', None) is not None and not args.xmax > 0:
        view.show_error(f"--xmax phải dương, nhận {args.xmax}")
        return int(ExitCode.USAGE)

    config = Config.load(args.config)
    if getattr(args, 'grid', None) is not None:
        config.scale_settings.n_grid = args.grid
    if args.seed is not None:
        config.simulation_settings.seed = args.seed
    if args.paths is not None:
        config.simulation_settings.paths = args.paths
    if not config.is_ready():
        invalid = [name for name, ok in config.validate().items() if not ok]
        view.show_error(f"Cấu hình không hợp lệ: {', '.join(invalid)}")
        return int(ExitCode.MODEL)

    controller = MainController(config)
    controller.set_view(view)
    out_dir = args.out or config.output_settings.output_folder

    if args.command == 'scale':
        return controller.run_scale(args.model, out_dir, x_max=args.xmax, n_grid=args.grid)
    if args.command == 'barrier':
        return controller.run_barrier(args.model, out_dir, x_max=args.xmax, n_grid=args.grid, strict=args.strict)
    if args.command == 'verify':
        return controller.run_verify(args.model, out_dir, barrier=args.barrier, x_hi=args.xhi,
                                     x_max=args.xmax, n_grid=args.grid, strict=args.strict)
    if args.command == 'simulate':
        return controller.run_simulate(args.model, out_dir, x=args.x, barrier=args.barrier, barriers=args.barriers,
                                       dt=args.dt, x_max=args.xmax, n_grid=args.grid, strict=args.strict)
    return controller.run_reproduce_figures(out_dir, strict=args.strict)


def main():
    """
    Hàm khởi chạy ứng dụng chính.
    """
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\nĐã dừng.")
        sys.exit(130)
    except Exception as e:
        print(f"Lỗi không mong đợi: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
