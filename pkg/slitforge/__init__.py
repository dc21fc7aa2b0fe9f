"""
slitforge: constructive machinery for nonergodic directions on slit tori
"""

__version__ = "0.1.0"
