"""
Integration test module
"""
