"""
ribbon-poisson - r-matrix Poisson structures on ribbon-graph connections
"""

__version__ = "0.3.0"
__author__ = "ribbon-poisson developers"
