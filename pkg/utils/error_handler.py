"""
Error Handler - Xử lý lỗi và logging cho BarrierLab.

Module này cung cấp:
- Hệ thống exception cho các lỗi mô hình, số học và mô phỏng
- Logging chi tiết với stack trace (file + console)
- Retry với tham số độ chính xác tăng dần
- Thống kê lỗi theo mức độ nghiêm trọng
"""

import os
import traceback
import logging
from typing import Optional, Callable, Any, Dict, Iterable
from datetime import datetime
from enum import Enum, IntEnum
from dataclasses import dataclass

LOGGER_NAME = "barrierlab"


class BarrierLabError(Exception):
    """Lỗi gốc của toàn bộ thư viện."""


class ModelSpecError(BarrierLabError):
    """
    Lỗi đọc/kiểm tra đặc tả mô hình.

    Attributes:
        field: Tên trường gây lỗi (nếu xác định được)
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DomainError(BarrierLabError, ValueError):
    """Tham số nằm ngoài miền xác định của phép toán."""


class ScaleFunctionError(BarrierLabError):
    """Lỗi khi xây dựng hoặc đánh giá scale function."""


class ConfluentRootsError(ScaleFunctionError):
    """Đa thức có nghiệm trùng (hoặc gần trùng dưới ngưỡng)."""


class NonRationalModelError(ScaleFunctionError):
    """Mô hình không có Laplace exponent hữu tỉ."""


class ExtrapolationError(ScaleFunctionError):
    """Truy vấn ngoài lưới đã lập bảng."""


class ConvergenceError(BarrierLabError):
    """
    Thuật toán số không hội tụ.

    Attributes:
        residual: Sai số đạt được
    """

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class SimulationError(BarrierLabError):
    """Cấu hình mô phỏng Monte Carlo không hợp lệ."""


class OutputError(BarrierLabError):
    """
    Không ghi được file kết quả.

    Attributes:
        path: Đường dẫn file
    """

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(message)


class ExitCode(IntEnum):
    """Mã thoát của dòng lệnh."""
    OK = 0
    USAGE = 2
    MODEL = 3
    NUMERICAL = 4
    OUTPUT = 5
    CONDITION2 = 10
    CONVEXITY = 11
    HJB = 12
    SIMULATION_MISMATCH = 13


def exit_code_for(exception: BaseException) -> ExitCode:
    """Mã thoát ứng với một exception của BarrierLab."""
    if isinstance(exception, DomainError):
        return ExitCode.USAGE
    if isinstance(exception, (ModelSpecError, SimulationError)):
        return ExitCode.MODEL
    if isinstance(exception, OutputError):
        return ExitCode.OUTPUT
    return ExitCode.NUMERICAL


class ErrorSeverity(Enum):
    """Mức độ nghiêm trọng của lỗi."""
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


@dataclass
class ErrorInfo:
    """
    Thông tin về lỗi.

    Attributes:
        timestamp: Thời gian xảy ra lỗi
        severity: Mức độ nghiêm trọng
        message: Thông điệp lỗi
        exception: Exception object
        stack_trace: Stack trace
        context: Context bổ sung (tham số mô hình, lưới, ...)
    """
    timestamp: datetime
    severity: ErrorSeverity
    message: str
    exception: Optional[Exception] = None
    stack_trace: Optional[str] = None
    context: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        """Initialize mutable defaults."""
        if self.context is None:
            self.context = {}

    def to_dict(self) -> Dict[str, Any]:
        """Chuyển đổi thành dictionary."""
        return {
            'timestamp': self.timestamp.isoformat(),
            'severity': self.severity.value,
            'message': self.message,
            'exception': str(self.exception) if self.exception else None,
            'exception_type': type(self.exception).__name__ if self.exception else None,
            'stack_trace': self.stack_trace,
            'context': self.context
        }


class ErrorHandler:
    """
    Xử lý lỗi tập trung.

    Class này cung cấp:
    - Logging chi tiết ra file và console
    - Retry với tham số độ chính xác tăng dần
    - Thống kê lỗi
    - Callback thông báo cho view
    """

    def __init__(
        self,
        log_dir: Optional[str] = "./logs",
        notification_callback: Optional[Callable[[ErrorInfo], None]] = None
    ):
        """
        Khởi tạo ErrorHandler.

        Args:
            log_dir: Thư mục lưu logs (None = chỉ log ra console)
            notification_callback: Callback để thông báo lỗi
        """
        self.log_dir = log_dir
        self.notification_callback = notification_callback

        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

        self._setup_logging()

        # Statistics
        self.error_count = 0
        self.errors_by_severity = {severity: 0 for severity in ErrorSeverity}
        self.history: list = []

    def _setup_logging(self) -> None:
        """Setup logging configuration."""
        self.logger = logging.getLogger(LOGGER_NAME)
        self.logger.setLevel(logging.DEBUG)

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        # Không gắn handler hai lần khi tạo nhiều ErrorHandler
        existing = {getattr(h, '_barrierlab_tag', None) for h in self.logger.handlers}

        if self.log_dir and 'file' not in existing:
            fh = logging.FileHandler(os.path.join(self.log_dir, 'errors.log'), encoding='utf-8')
            fh.setLevel(logging.DEBUG)
            fh.setFormatter(formatter)
            fh._barrierlab_tag = 'file'
            self.logger.addHandler(fh)

        if 'console' not in existing:
            ch = logging.StreamHandler()
            ch.setLevel(logging.WARNING)
            ch.setFormatter(formatter)
            ch._barrierlab_tag = 'console'
            self.logger.addHandler(ch)

    def handle_error(
        self,
        exception: Exception,
        message: str,
        severity: ErrorSeverity = ErrorSeverity.ERROR,
        context: Optional[Dict[str, Any]] = None
    ) -> ErrorInfo:
        """
        Xử lý lỗi.

        Args:
            exception: Exception object
            message: Thông điệp lỗi
            severity: Mức độ nghiêm trọng
            context: Context bổ sung

        Returns:
            ErrorInfo object
        """
        self.error_count += 1
        self.errors_by_severity[severity] += 1

        error_info = ErrorInfo(
            timestamp=datetime.now(),
            severity=severity,
            message=message,
            exception=exception,
            stack_trace=traceback.format_exc(),
            context=context
        )
        self.history.append(error_info)

        self._log_error(error_info)

        if self.notification_callback:
            try:
                self.notification_callback(error_info)
            except Exception as e:
                self.logger.error(f"Lỗi gọi notification callback: {e}")

        return error_info

    def _log_error(self, error_info: ErrorInfo) -> None:
        """
        Ghi log lỗi.

        Args:
            error_info: Thông tin lỗi
        """
        log_level = {
            ErrorSeverity.INFO: logging.INFO,
            ErrorSeverity.WARNING: logging.WARNING,
            ErrorSeverity.ERROR: logging.ERROR,
            ErrorSeverity.CRITICAL: logging.CRITICAL
        }.get(error_info.severity, logging.ERROR)

        log_message = f"{error_info.message}"
        if error_info.exception:
            log_message += f" - Exception: {error_info.exception}"
        if error_info.context:
            log_message += f" - Context: {error_info.context}"

        self.logger.log(log_level, log_message)

        if error_info.stack_trace and error_info.stack_trace.strip() != "NoneType: None":
            self.logger.debug(f"Stack trace:\n{error_info.stack_trace}")

    def retry_with_escalation(
        self,
        func: Callable[..., Any],
        attempts: Iterable[Dict[str, Any]],
        exceptions: tuple = (ConvergenceError,),
        on_retry: Optional[Callable[[int, Exception], None]] = None
    ) -> Any:
        """
        Thử lại function với bộ tham số độ chính xác tăng dần.

        Args:
            func: Function cần thực thi, nhận keyword arguments
            attempts: Dãy các bộ tham số, bộ sau chặt hơn bộ trước
            exceptions: Tuple các exception cần retry
            on_retry: Callback khi retry (attempt_number, exception)

        Returns:
            Kết quả của function

        Raises:
            Exception cuối cùng nếu thất bại tất cả các lần thử
        """
        attempts = list(attempts)
        last_exception: Optional[Exception] = None

        for attempt, kwargs in enumerate(attempts, start=1):
            try:
                return func(**kwargs)
            except exceptions as e:
                last_exception = e
                self.logger.warning(
                    f"Attempt {attempt}/{len(attempts)} failed: {e}. "
                    f"Escalating parameters..."
                )
                if on_retry:
                    try:
                        on_retry(attempt, e)
                    except Exception as callback_error:
                        self.logger.error(f"Lỗi on_retry callback: {callback_error}")

        self.handle_error(
            last_exception,
            f"Thất bại sau {len(attempts)} lần thử",
            severity=ErrorSeverity.ERROR,
            context={'function': getattr(func, '__name__', str(func))}
        )
        raise last_exception

    def get_statistics(self) -> Dict[str, Any]:
        """
        Lấy thống kê lỗi.

        Returns:
            Dictionary chứa thống kê
        """
        return {
            'total_errors': self.error_count,
            'by_severity': {
                severity.value: count
                for severity, count in self.errors_by_severity.items()
            }
        }

    def reset_statistics(self) -> None:
        """Reset thống kê lỗi."""
        self.error_count = 0
        self.history = []
        for severity in ErrorSeverity:
            self.errors_by_severity[severity] = 0


# Singleton instance
_error_handler_instance: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """
    Lấy singleton instance của ErrorHandler.

    Returns:
        ErrorHandler instance
    """
    global _error_handler_instance
    if _error_handler_instance is None:
        _error_handler_instance = ErrorHandler(log_dir=None)
    return _error_handler_instance


def set_error_handler(handler: ErrorHandler) -> None:
    """Thay singleton (controller gọi khi đã có cấu hình log_dir)."""
    global _error_handler_instance
    _error_handler_instance = handler


def handle_error(
    exception: Exception,
    message: str,
    severity: ErrorSeverity = ErrorSeverity.ERROR,
    context: Optional[Dict[str, Any]] = None
) -> ErrorInfo:
    """
    Shortcut function để xử lý lỗi.

    Args:
        exception: Exception object
        message: Thông điệp lỗi
        severity: Mức độ nghiêm trọng
        context: Context bổ sung

    Returns:
        ErrorInfo object
    """
    return get_error_handler().handle_error(exception, message, severity, context)
