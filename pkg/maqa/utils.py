"""
Shared helpers: settings lookup, seeded random generators and stable serialization.
"""
import hashlib
import json
import os

import numpy as np
from django.conf import settings


def get_setting(name, default):
    """
    Read a MAQA_* value from Django settings, falling back to the environment.

    The numerical modules are imported by tests and scripts that may not have
    configured Django, so an unconfigured settings object is not an error.
    """
    if settings.configured:
        return getattr(settings, name, default)
    return os.getenv(name, default)


def make_rng(seed):
    """Return a numpy Generator for a (possibly 64-bit) integer seed."""
    return np.random.default_rng(int(seed))


def write_csv(path, header, rows):
    """Plot-ready numeric CSV; every value carries 17 significant digits, so integers print bare."""
    table = np.asarray(rows, dtype=float).reshape(len(rows), len(header))
    np.savetxt(path, table, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


def to_pairs(values):
    """Complex vector -> list of [re, im] pairs."""
    return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).ravel()]


def matrix_to_pairs(matrix):
    """Complex matrix -> row-major list of rows of [re, im] pairs."""
    return [to_pairs(row) for row in np.asarray(matrix, dtype=complex)]


def canonical_json(data):
    """Serialize with sorted keys so identical data gives identical bytes."""
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def sha256_hex(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
