"""
Package for utils.
"""
