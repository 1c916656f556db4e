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

"""Regenerates the decoder cross-check corpus.

Each JPEG is written by Pillow/libjpeg and decoded to luma by libjpeg with
grayscale output (no color conversion). The decoded Y plane is frozen next to
the JPEG as <name>.luma.png. Run from this directory:

    python3 make_corpus.py
"""

import io
import pathlib

import numpy as np
from PIL import Image

OUT = pathlib.Path(__file__).resolve().parent / "corpus"


def scene(w, h, seed):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    r = 128 + 60 * np.sin(x / 7.0) * np.cos(y / 11.0) + rng.normal(0, 12, (h, w))
    g = 128 + 50 * np.cos((x + y) / 9.0) + rng.normal(0, 12, (h, w))
    b = 90 + 0.6 * x - 0.3 * y + rng.normal(0, 12, (h, w))
    rgb = np.stack([r, g, b], axis=-1)
    rgb[h // 4:h // 2, w // 3:w // 2] = (230, 40, 40)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


def save(name, img, **kw):
    buf = io.BytesIO()
    img.save(buf, "JPEG", **kw)
    data = buf.getvalue()
    (OUT / f"{name}.jpg").write_bytes(data)
    ref = Image.open(io.BytesIO(data))
    if ref.mode != "L":
        ref.draft("L", ref.size)
    ref = ref.convert("L") if ref.mode != "L" else ref
    ref.load()
    ref.save(OUT / f"{name}.luma.png")


def main():
    OUT.mkdir(exist_ok=True)
    rgb = scene(97, 61, 1)
    color = Image.fromarray(rgb, "RGB")
    gray = Image.fromarray(scene(120, 80, 2)[:, :, 1], "L")
    save("gray_q75", gray, quality=75)
    save("gray_q95_odd", Image.fromarray(scene(53, 35, 3)[:, :, 0], "L"),
         quality=95)
    save("color420_q80_odd", color, quality=80, subsampling=2)
    save("color444_q90", Image.fromarray(scene(64, 48, 4), "RGB"), quality=90,
         subsampling=0)
    save("color422_q70", Image.fromarray(scene(72, 40, 5), "RGB"), quality=70,
         subsampling=1)
    save("gray_restart", gray, quality=85, restart_marker_blocks=3)
    save("color_restart_opt", color, quality=60, optimize=True,
         restart_marker_rows=1)
    save("gray_optimized", gray, quality=50, optimize=True)
    # Unsupported coding for the error path; no luma reference needed.
    buf = io.BytesIO()
    gray.save(buf, "JPEG", quality=75, progressive=True)
    (OUT / "progressive.jpg").write_bytes(buf.getvalue())


if __name__ == "__main__":
    main()
