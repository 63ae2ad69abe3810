"""
Reflection-group Bergman kernel verification toolkit
"""

__version__ = "1.0.0"
