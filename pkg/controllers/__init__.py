"""
Controllers package - Điều phối các lệnh giữa View và Services.
"""

from controllers.main_controller import MainController
from controllers.reproduction_controller import ReproductionController, ReproductionState

__all__ = ['MainController', 'ReproductionController', 'ReproductionState']
