"""
dackrr - Divide-and-conquer kernel ridge regression
Averaged KRR estimates with bootstrap L2 confidence bands
"""

__version__ = "0.1.0"
