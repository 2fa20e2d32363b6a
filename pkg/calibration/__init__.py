"""Fitting of the Gaussian device-variation macro-model from conductance measurements."""
