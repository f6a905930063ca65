"""Paint three glove colours, with and without blood, onto a synthetic hand.

Writes PNGs next to this script under ``out/gloves``. Everything outside
the hand mask is left untouched, which the script checks before saving.
"""
from pathlib import Path

import numpy as np
from PIL import Image

from rohan.augment import DEFAULT_PALETTE, BloodParams, augment_image
from rohan.core import boxes_from_mask

out = Path(__file__).parent / "out" / "gloves"
out.mkdir(parents=True, exist_ok=True)

# a skin-toned "hand": palm plus four fingers on a grey gradient
h, w = 160, 200
img = np.zeros((h, w, 3), np.uint8)
img[...] = np.linspace(60, 180, w, dtype=np.uint8)[None, :, None]
mask = np.zeros((h, w), bool)
mask[70:140, 60:130] = True
for k in range(4):
    mask[25:70, 62 + 18 * k:74 + 18 * k] = True
img[mask] = (205, 160, 130)

print("hand boxes:", boxes_from_mask(mask))
Image.fromarray(img).save(out / "bare.png")

for spec in DEFAULT_PALETTE:
    for bloody in (False, True):
        blood = BloodParams(seed=7, density=0.01) if bloody else None
        glove = augment_image(img, mask, spec, blood)
        assert np.array_equal(glove[~mask], img[~mask])
        name = f"{spec.name or 'glove'}{'_blood' if bloody else ''}.png"
        Image.fromarray(glove).save(out / name)
        print("wrote", out / name)
