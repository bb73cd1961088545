"""
por-toolkit: unconditionally secure proof-of-retrievability schemes.
"""
__version__ = "1.0.0"
