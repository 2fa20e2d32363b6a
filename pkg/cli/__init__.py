"""
Command-line surface: config, MNIST loading and experiment orchestration.
"""
