"""
Services package - Chứa các service tính toán và I/O.
"""

from services.file_service import FileService
from services.scale_service import ScaleService
from services.barrier_service import BarrierService
from services.hjb_service import HJBService
from services.simulation_service import SimulationService

__all__ = ['FileService', 'ScaleService', 'BarrierService', 'HJBService', 'SimulationService']
