"""
System model, simulation and linear-algebra helpers.
"""
