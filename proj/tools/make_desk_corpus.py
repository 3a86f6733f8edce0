#!/usr/bin/env python3
# Copyright 2026 The D3 Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates tests/data/desk from the sample images bundled with scikit-image.

Every source is converted to 8-bit grayscale, scaled so the short side is 256
pixels (Lanczos) and center-cropped to 256x256, without color profiles. The selected images are public
domain or CC0 in scikit-image's data directory.
"""

import argparse
import os

import skimage
from PIL import Image

SOURCES = [
    "astronaut.png", "camera.png", "coffee.png", "chelsea.png", "rocket.jpg", "brick.png",
    "grass.png", "gravel.png", "text.png", "hubble_deep_field.jpg", "retina.jpg",
]


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(here, "..", "tests", "data", "desk"))
    parser.add_argument("--side", type=int, default=256)
    args = parser.parse_args()
    data_dir = os.path.join(os.path.dirname(skimage.__file__), "data")
    os.makedirs(args.out, exist_ok=True)
    for name in SOURCES:
        im = Image.open(os.path.join(data_dir, name)).convert("L")
        scale = args.side / min(im.size)
        im = im.resize((round(im.width * scale), round(im.height * scale)), Image.LANCZOS)
        left, top = (im.width - args.side) // 2, (im.height - args.side) // 2
        im = im.crop((left, top, left + args.side, top + args.side))
        im.info.pop("icc_profile", None)
        im.save(os.path.join(args.out, os.path.splitext(name)[0] + ".png"))


if __name__ == "__main__":
    main()
