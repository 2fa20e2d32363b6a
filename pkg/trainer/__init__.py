"""Crossbar-hosted MLP with hybrid-precision weight updates."""
