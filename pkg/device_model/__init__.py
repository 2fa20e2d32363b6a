"""FeFET conductance macro-model, device variation and calibration protocol."""
