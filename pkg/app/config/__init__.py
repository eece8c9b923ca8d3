"""
Configuration package initialization
"""
