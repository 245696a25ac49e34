"""
Logging, random streams and text rendering helpers
"""
