"""
Views package - Giao diện dòng lệnh.
"""

from views.console_view import ConsoleView

__all__ = ['ConsoleView']
