"""Data models for the trainer."""
