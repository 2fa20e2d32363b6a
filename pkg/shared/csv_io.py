"""
Shared CSV and output-directory helpers.
"""
import os
from typing import Optional, Sequence

import pandas as pd


def create_output_dir(path: str) -> str:
    """Create the output directory if needed and return its absolute path."""
    output_dir = os.path.abspath(path)
    os.makedirs(output_dir, exist_ok=True)
    return output_dir


def write_csv(frame: pd.DataFrame, path: str, columns: Optional[Sequence[str]] = None) -> str:
    """
    Write a DataFrame as comma-separated UTF-8 text with LF endings and no index.

    Floats are written in shortest round-trip form, so reruns with the same
    inputs produce byte-identical files.

    Args:
        frame: Data to write
        path: Destination file
        columns: Column order to enforce (defaults to the frame's order)

    Returns:
        The path written
    """
    if columns is not None:
        frame = frame.loc[:, list(columns)]
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path
