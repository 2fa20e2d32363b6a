"""Data models for FeFET devices."""
