"""
Logging settings and functions to setup.
"""
