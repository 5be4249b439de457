#!/usr/bin/env python3
"""Convert torchvision's pretrained VGG-16 conv weights to the .npz layout
the extractor loads.

Needs torch + torchvision (and their ~500 MB download) only at conversion
time; the package itself never imports them.  Usage:

    python scripts/export_vgg16_weights.py --out runs/vgg16_weights.npz
"""

import argparse
import sys

import numpy as np

# torchvision's features-module indices for the 13 conv layers, in order
_TORCH_INDICES = [0, 2, 5, 7, 10, 12, 14, 17, 19, 21, 24, 26, 28]
_LAYER_NAMES = [
    "conv1_1", "conv1_2",
    "conv2_1", "conv2_2",
    "conv3_1", "conv3_2", "conv3_3",
    "conv4_1", "conv4_2", "conv4_3",
    "conv5_1", "conv5_2", "conv5_3",
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="Output .npz path")
    args = parser.parse_args()

    try:
        from torchvision.models import VGG16_Weights, vgg16
    except ImportError:
        print("torchvision is required: pip install torch torchvision",
              file=sys.stderr)
        return 1

    model = vgg16(weights=VGG16_Weights.IMAGENET1K_V1)
    state = model.features.state_dict()
    arrays = {}
    for name, idx in zip(_LAYER_NAMES, _TORCH_INDICES):
        arrays[f"{name}.weight"] = state[f"{idx}.weight"].numpy().astype(np.float32)
        arrays[f"{name}.bias"] = state[f"{idx}.bias"].numpy().astype(np.float32)
    np.savez(args.out, **arrays)
    print(f"wrote {len(arrays)} arrays to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
