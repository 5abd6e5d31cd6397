"""
Monte Carlo harness: experiment configs, the run engine, outputs and diagnostics.
"""
