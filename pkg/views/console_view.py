"""
Console View - Giao diện dòng lệnh của BarrierLab.

Module này hiển thị:
- Log tiến trình có timestamp (stderr)
- Tiến trình theo bước
- Bảng tóm tắt kết quả và verdict
"""

import sys
from datetime import datetime
from typing import Any, Dict, Optional, TextIO


class ConsoleView:
    """
    View ghi ra terminal.

    Controller chỉ gọi các phương thức public (log, update_progress,
    show_warning, show_error, print_summary), giống hợp đồng của cửa sổ GUI.
    """

    def __init__(self, stream: Optional[TextIO] = None, quiet: bool = False):
        """
        Khởi tạo ConsoleView.

        Args:
            stream: Luồng ghi log (mặc định stderr)
            quiet: Tắt log tiến trình, chỉ giữ cảnh báo/lỗi
        """
        self.stream = stream or sys.stderr
        self.quiet = quiet
        self.lines: list = []

    def log(self, message: str, timestamp: bool = True) -> None:
        """
        Ghi một dòng log.

        Args:
            message: Nội dung log
            timestamp: Có thêm timestamp không
        """
        if timestamp:
            message = f"[{datetime.now().strftime('%H:%M:%S')}] {message}"
        self.lines.append(message)
        if not self.quiet:
            print(message, file=self.stream)

    def update_progress(self, current: int, total: int, step_name: str = "") -> None:
        """Cập nhật tiến trình dạng [current/total] step_name."""
        self.log(f"[{current}/{total}] {step_name}")

    def show_warning(self, message: str) -> None:
        """Hiển thị cảnh báo."""
        self.lines.append(f"Cảnh báo: {message}")
        print(f"Cảnh báo: {message}", file=self.stream)

    def show_error(self, message: str) -> None:
        """Hiển thị lỗi."""
        self.lines.append(f"Lỗi: {message}")
        print(f"Lỗi: {message}", file=self.stream)

    def print_summary(self, title: str, summary: Dict[str, Any]) -> None:
        """In bảng key: value ra stdout."""
        print("=" * 50)
        print(f"  {title}")
        print("=" * 50)
        width = max((len(k) for k in summary), default=0)
        for key, value in summary.items():
            if isinstance(value, float):
                value = f"{value:.10g}"
            print(f"  {key.ljust(width)} : {value}")
