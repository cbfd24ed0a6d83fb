"""
Utils Package
Utility functions and helpers
"""
from utils.logger import setup_logger

__all__ = ['setup_logger']