"""
approxcomp - approximate comparison of complexity functions and
composition of mathematical services.

The package provides:
- A black-box comparator deciding the asymptotic relation of two growth functions
- A Theta-class organizer for libraries of complexity functions
- A registry of base services, approximation formulas and numeric services
- A composer building executable evaluation plans from that registry

Version: 1.0.0
"""

__version__ = "1.0.0"

from .config import Config

__all__ = [
    'Config',
]
