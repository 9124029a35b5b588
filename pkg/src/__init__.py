"""
Variance decomposition toolkit for extensive-form games with chance
"""
__version__ = "0.1.0"
