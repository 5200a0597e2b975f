"""
factest - コアモジュール初期化
"""

from .config import RunConfig, SystemConfig, build_run_config, load_run_config, dump_run_config, system_config
from .logger import setup_logging, get_logger
from .exceptions import *

__all__ = [
    "RunConfig",
    "SystemConfig",
    "build_run_config",
    "load_run_config",
    "dump_run_config",
    "system_config",
    "setup_logging",
    "get_logger",
    "FactestError",
    "ConfigurationError",
    "PlanError",
    "RegistryError",
    "ReportError",
    "ParseError",
    "NumericError",
    "DomainError",
    "DegenerateDataError",
    "InfiniteStatisticError",
    "ResolutionWarning",
]
