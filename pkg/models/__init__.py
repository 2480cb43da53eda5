"""
Models package - Chứa các data models.
"""

from models.config import Config
from models.levy_model import LevyModel
from models.scale_function import ScaleFunction
from models.policy import BarrierPolicy, OptimalityCertificate
from models.reports import GeneratorQuadrature, VerificationReport, SimConfig, SimResult, PolicyComparison

__all__ = [
    'Config',
    'LevyModel',
    'ScaleFunction',
    'BarrierPolicy',
    'OptimalityCertificate',
    'GeneratorQuadrature',
    'VerificationReport',
    'SimConfig',
    'SimResult',
    'PolicyComparison',
]
