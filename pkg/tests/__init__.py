"""
Tests package for smoothppl.
"""
