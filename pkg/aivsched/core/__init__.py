"""
Simulation, scheduling policies, learning and benchmarking
"""
