"""High-precision gradient accumulator emulating the SRAM unit."""
