"""
Contains tests
"""
