"""
File Service - Service xử lý đọc/ghi file kết quả.

Service này quản lý:
- Đọc/ghi file kết quả JSON
- Đọc/ghi bảng CSV (17 chữ số có nghĩa, xuống dòng LF)
- Tạo thư mục output nếu chưa có
"""

import os
import csv
import logging
from typing import Any, List, Optional, Sequence, Tuple

from utils.helpers import ensure_directory, format_float, safe_json_load, safe_json_save
from utils.error_handler import OutputError

logger = logging.getLogger("barrierlab.file_service")


class FileService:
    """
    Service xử lý các thao tác với file.

    Class này cung cấp các phương thức để:
    - Đọc/ghi file JSON
    - Đọc/ghi file CSV có dòng tiêu đề
    - Quản lý thư mục output
    """

    def __init__(self, output_folder: Optional[str] = None):
        """
        Khởi tạo FileService.

        Args:
            output_folder: Thư mục gốc cho đường dẫn tương đối (None = thư mục hiện tại)
        """
        self.output_folder = output_folder

    def path(self, filename: str) -> str:
        """Đường dẫn đầy đủ của filename trong output_folder."""
        if self.output_folder is None or os.path.isabs(filename):
            return filename
        return os.path.join(self.output_folder, filename)

    @staticmethod
    def read_json(filepath: str, default: Any = None) -> Any:
        """
        Đọc file JSON.

        Args:
            filepath: Đường dẫn đến file JSON
            default: Giá trị mặc định nếu đọc thất bại

        Returns:
            Dữ liệu đã parse hoặc giá trị mặc định
        """
        return safe_json_load(filepath, default)

    @staticmethod
    def write_json(filepath: str, data: Any, indent: int = 4) -> bool:
        """
        Ghi dữ liệu vào file JSON (numpy và số phức được chuyển đổi).

        Args:
            filepath: Đường dẫn đến file JSON
            data: Dữ liệu cần ghi
            indent: Số spaces để indent

        Returns:
            True nếu ghi thành công
        """
        ok = safe_json_save(filepath, data, indent)
        if ok:
            logger.debug(f"Đã ghi {filepath}")
        return ok

    @staticmethod
    def write_csv(filepath: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> bool:
        """
        Ghi bảng CSV với dòng tiêu đề.

        Số thực được ghi với 17 chữ số có nghĩa để đọc lại chính xác từng bit;
        None được ghi thành ô trống.

        Args:
            filepath: Đường dẫn file CSV
            header: Tên các cột
            rows: Các hàng, mỗi hàng cùng độ dài với header

        Returns:
            True nếu ghi thành công
        """
        try:
            ensure_directory(os.path.dirname(filepath))
            with open(filepath, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(header)
                for row in rows:
                    if len(row) != len(header):
                        raise ValueError(f"hàng có {len(row)} cột, header có {len(header)}")
                    writer.writerow([_format_cell(v) for v in row])
            logger.debug(f"Đã ghi {filepath}")
            return True
        except (OSError, ValueError) as e:
            logger.error(f"Lỗi ghi file CSV {filepath}: {e}")
            return False

    def save_csv(self, filepath: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """
        Ghi CSV như write_csv nhưng ném OutputError khi thất bại.

        Returns:
            Đường dẫn đã ghi

        Raises:
            OutputError: Không ghi được file
        """
        if not self.write_csv(filepath, header, rows):
            raise OutputError(f"không ghi được file CSV {filepath}", path=filepath)
        return filepath

    def save_json(self, filepath: str, data: Any) -> str:
        """Ghi JSON như write_json, ném OutputError khi thất bại."""
        if not self.write_json(filepath, data):
            raise OutputError(f"không ghi được file JSON {filepath}", path=filepath)
        return filepath

    @staticmethod
    def read_csv(filepath: str) -> Tuple[List[str], List[List[Optional[float]]]]:
        """
        Đọc bảng CSV số do write_csv ghi.

        Returns:
            (header, rows); ô trống được đọc thành None
        """
        with open(filepath, 'r', encoding='utf-8', newline='') as f:
            reader = csv.reader(f)
            header = next(reader)
            rows = [[float(v) if v != '' else None for v in row] for row in reader]
        return header, rows

    @staticmethod
    def file_exists(filepath: str) -> bool:
        """
        Kiểm tra file có tồn tại không.

        Args:
            filepath: Đường dẫn đến file

        Returns:
            True nếu file tồn tại
        """
        return os.path.isfile(filepath)

    @staticmethod
    def create_folder(folderpath: str) -> bool:
        """
        Tạo folder nếu chưa tồn tại.

        Args:
            folderpath: Đường dẫn đến folder

        Returns:
            True nếu tạo thành công hoặc đã tồn tại
        """
        return ensure_directory(folderpath)


def _format_cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, float)) or hasattr(value, 'dtype'):
        return format_float(value)
    return str(value)
