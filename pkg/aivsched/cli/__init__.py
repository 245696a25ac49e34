"""
aivsched command-line interface
"""
