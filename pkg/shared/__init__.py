"""Shared utilities for the FeFET hybrid-precision training simulator."""
