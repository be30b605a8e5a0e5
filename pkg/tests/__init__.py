"""
Test suite for coopreg
"""
