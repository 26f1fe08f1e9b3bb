"""Shared constants and seeding helpers."""

import zlib

import numpy as np
from scipy import constants

C = constants.c
K_BOLTZMANN = constants.k


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


def dbm2watt(x):
    return 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)


def derive_rng(seed, namespace, *index):
    """Independent generator for ``(seed, namespace, index...)``.

    The stream only depends on the key, never on call order, so work can be
    split across threads without changing the result.
    """
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(namespace.encode())]
    key.extend(int(i) for i in index)
    return np.random.default_rng(np.random.SeedSequence(key))
