#!/usr/bin/env python3
"""
Generate a small synthetic MNIST-format dataset for smoke runs:
- train-/t10k- images and labels in IDX format
- one fixed stroke pattern per digit class plus pixel noise

Usage: make_synthetic_mnist.py DATA_DIR [TRAIN_COUNT] [TEST_COUNT] [SEED]
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli.mnist import write_synthetic_mnist


def main(argv):
    if not argv:
        print(__doc__)
        return 2
    data_dir = argv[0]
    train_count = int(argv[1]) if len(argv) > 1 else 2000
    test_count = int(argv[2]) if len(argv) > 2 else 500
    seed = int(argv[3]) if len(argv) > 3 else 0

    paths = write_synthetic_mnist(data_dir, train_count, test_count, seed)
    print(f"✅ Wrote {train_count} training and {test_count} test images to {data_dir}")
    for path in paths.values():
        print(f"   - {path}")
    print(f"ℹ️  export FERROSIM_DATA_DIR={data_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
