"""Image and 16-bit raster I/O.

Disparity rasters store pixels as round(disp_px * 256) saturated to uint16;
ground-truth depth rasters follow the same uint16 convention with
depth_m = pixel / 256 and 0 marking invalid pixels.
"""

import numpy as np
from PIL import Image

RASTER_SCALE = 256.0


def read_image_rgb(path):
    """Load an image as a (1, 3, H, W) float32 tensor in [0, 1]."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(rgb.transpose(2, 0, 1)[None])


def write_disparity_raster(disp, path):
    """Write a 2-D disparity map (pixels) as a saturating 16-bit raster."""
    disp = np.asarray(disp, dtype=np.float64)
    if disp.ndim != 2:
        raise ValueError(f"expected a 2-D disparity raster, got shape {disp.shape}")
    pixels = np.clip(np.round(disp * RASTER_SCALE), 0, 65535).astype(np.uint16)
    Image.fromarray(pixels).save(path, format="PNG")


def read_raster_16(path):
    """Read a 16-bit raster back to float32 units (pixel / 256)."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected single-channel raster, got {arr.shape}")
    return arr.astype(np.float32) / RASTER_SCALE
