"""
Core package: doubly stochastic kernel component analysis.
"""
