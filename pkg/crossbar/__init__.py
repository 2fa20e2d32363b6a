"""Differential-pair FeFET crossbar arrays and their vector-matrix products."""
