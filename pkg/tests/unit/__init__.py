"""
Unit test module
"""
