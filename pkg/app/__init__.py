"""
Two-channel point-interaction resonance finder package
"""
__version__ = "0.1.0"
