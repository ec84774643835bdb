"""
Spatio-temporal graph trajectory forecaster.
"""

__version__ = "0.1.0"
