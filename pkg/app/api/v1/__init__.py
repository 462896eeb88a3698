"""
API v1 package initialization.
"""
