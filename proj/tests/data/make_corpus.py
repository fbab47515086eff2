"""Writes the NIfTI-1 interoperability corpus with nibabel.

Run from this directory: python3 make_corpus.py
Produces nifti/*.nii[.gz] and nifti/golden.json (geometry and decoded
voxel values as nibabel reports them).
"""
import json
import os

import nibabel as nib
import numpy as np

OUT = "nifti"
rng = np.random.default_rng(2024)
golden = {}


def rot(ax, deg):
    t = np.deg2rad(deg)
    c, s = np.cos(t), np.sin(t)
    m = np.eye(3)
    i, j = [(1, 2), (0, 2), (0, 1)][ax]
    m[i, i], m[i, j], m[j, i], m[j, j] = c, -s, s, c
    return m


def affine(spacing, origin, r=np.eye(3)):
    a = np.eye(4)
    a[:3, :3] = r @ np.diag(spacing)
    a[:3, 3] = origin
    return a


def record(name, img, world, values, channels=1):
    path = os.path.join(OUT, name)
    nib.save(img, path)
    golden[name] = {
        "dims": [int(d) for d in img.shape[:3]],
        "channels": channels,
        "datatype": int(img.header["datatype"]),
        "index_to_world": np.asarray(world, dtype=float).tolist(),
        # Fortran order: axis 0 fastest, channel slowest.
        "values": np.asarray(values, dtype=np.float64).flatten(order="F").tolist(),
    }


# uint8 with an oblique sform, gzipped.
data = rng.integers(0, 256, size=(4, 3, 2), dtype=np.uint8)
a = affine([0.9, 1.1, 2.0], [-12.5, 30.0, 4.25], rot(2, 20) @ rot(0, -10))
img = nib.Nifti1Image(data, a)
img.set_qform(a, code=1)
img.set_sform(a, code=2)
record("uint8_sform.nii.gz", img, a, data)

# int16, qform only with a left-handed frame (qfac = -1).
data = rng.integers(-3000, 3000, size=(5, 4, 3), dtype=np.int16)
a = affine([1.0, 1.25, 1.5], [90.0, -126.0, -72.0], np.diag([-1.0, 1.0, 1.0]) @ rot(1, 15))
img = nib.Nifti1Image(data, None)
img.set_qform(a, code=1)
img.set_sform(None, code=0)
record("int16_qform.nii", img, img.get_qform(), data)

# float32 with neither form set: pixdim only.
data = rng.standard_normal((3, 3, 4)).astype(np.float32)
img = nib.Nifti1Image(data, None)
img.header.set_zooms((0.5, 0.75, 2.5))
img.set_qform(None, code=0)
img.set_sform(None, code=0)
record("float32_pixdim.nii", img, affine([0.5, 0.75, 2.5], [0, 0, 0]), data)

# float64, big-endian.
data = rng.standard_normal((2, 3, 4)).astype(">f8")
a = affine([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
hdr = nib.Nifti1Header(endianness=">")
img = nib.Nifti1Image(data, a, header=hdr)
img.set_sform(a, code=1)
record("float64_bigendian.nii", img, a, data)

# int32 with scl_slope / scl_inter.
raw = rng.integers(-1000, 1000, size=(3, 4, 2), dtype=np.int32)
a = affine([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
img = nib.Nifti1Image(raw, a)
img.header.set_slope_inter(2.0, -1.0)
img.set_sform(a, code=1)
nib.save(img, os.path.join(OUT, "int32_scaled.nii.gz"))
golden["int32_scaled.nii.gz"] = {
    "dims": [3, 4, 2],
    "channels": 1,
    "datatype": 8,
    "index_to_world": a.tolist(),
    "values": (raw.astype(np.float64) * 2.0 - 1.0).flatten(order="F").tolist(),
}

# 3-vector field (dim[0] = 5, dim[5] = 3).
data = rng.standard_normal((4, 3, 2, 1, 3)).astype(np.float32)
a = affine([1.0, 1.0, 1.0], [-2.0, -1.5, -0.5])
img = nib.Nifti1Image(data, a)
img.header.set_intent("vector")
img.set_sform(a, code=1)
nib.save(img, os.path.join(OUT, "vector3.nii.gz"))
golden["vector3.nii.gz"] = {
    "dims": [4, 3, 2],
    "channels": 3,
    "datatype": 16,
    "index_to_world": a.tolist(),
    "values": data[:, :, :, 0, :].astype(np.float64).flatten(order="F").tolist(),
}

# Label map written as int16 by nibabel.
labels = rng.choice(np.array([0, 2, 3, 41, 42], dtype=np.int16), size=(4, 4, 3))
a = affine([1.0, 1.0, 1.0], [0.0, 0.0, 0.0])
img = nib.Nifti1Image(labels, a)
img.set_sform(a, code=1)
record("labels_int16.nii.gz", img, a, labels)

with open(os.path.join(OUT, "golden.json"), "w") as f:
    json.dump(golden, f, indent=1, sort_keys=True)
    f.write("\n")
