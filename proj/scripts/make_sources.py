# Copyright 2026 The dctscope Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Rebuilds data/sources from the scikit-image sample images.

Images are converted to 8-bit luma (BT.601). Sources of 512 pixels or more on
both sides are box-downscaled by 2 to wash out any acquisition artifacts.
"""

import pathlib

import numpy as np
from PIL import Image
import skimage.data as sk

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "sources"
NAMES = ["astronaut", "brick", "camera", "chelsea", "coffee", "coins", "grass",
         "gravel"]


def luma(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 3:
        a = a[..., 0] * 0.299 + a[..., 1] * 0.587 + a[..., 2] * 0.114
    return a


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        y = luma(getattr(sk, name)())
        if min(y.shape) >= 512:
            h, w = (y.shape[0] // 2) * 2, (y.shape[1] // 2) * 2
            y = y[:h, :w].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
        img = Image.fromarray(np.clip(np.rint(y), 0, 255).astype(np.uint8), "L")
        img.save(OUT / f"{name}.png", optimize=True)
        print(name, img.size)


if __name__ == "__main__":
    main()
