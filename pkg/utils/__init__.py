"""
Utils package - Chứa các tiện ích hỗ trợ.
"""

from utils.helpers import (
    format_float,
    to_jsonable,
    safe_json_load,
    safe_json_save,
    ensure_directory
)

__all__ = [
    'format_float',
    'to_jsonable',
    'safe_json_load',
    'safe_json_save',
    'ensure_directory'
]
