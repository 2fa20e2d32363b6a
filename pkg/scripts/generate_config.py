#!/usr/bin/env python3
"""
Script to write a ferrosim experiment config with every default spelled out.
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli.config import ExperimentConfig, dump_config_toml

HEADER = """# ferrosim experiment config. Every key is optional; flags override file values.
# Dataset paths (train_images, train_labels, test_images, test_labels) default to
# the standard MNIST file names under $FERROSIM_DATA_DIR.
# mode: "binary" | "multilevel" | "float"; init: "random" | "negative"
# model: "default" | "noiseless" | "inline" (use [macro_model] below) | path to a fitted .yaml

"""


def create_config_file(path: str) -> str:
    """Write the default experiment config as TOML."""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(HEADER + dump_config_toml(ExperimentConfig()))

    print(f"✅ Config file created at {path}")
    print("⚠️  Dataset paths are not set. Either add them to the file or export FERROSIM_DATA_DIR")
    print("   pointing at a directory with the standard MNIST IDX files.")
    print("")
    print("ℹ️  The [macro_model] sigmas are synthetic defaults. Replace them with")
    print("   the output of `python -m cli.main calibrate` for fitted values.")
    return path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'ferrosim.toml')
    create_config_file(target)
