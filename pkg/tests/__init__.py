"""
Test package initialization
"""

