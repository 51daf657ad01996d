"""Bundled networks.

Discrete networks are BIF files from the bnlearn repository; continuous ones
use the linear-Gaussian descriptor format.

:data:`BENCHMARK` is the small, desk-scale suite used by the oracle sweeps:
the eight small discrete networks, WATER, and two hand-sized
linear-Gaussian stand-ins (``sachs-gauss``, ``child-gauss``) that reuse the
SACHS and CHILD topologies with fixed coefficients. The four published
linear-Gaussian networks (MAGIC-NIAB, ECOLI70, MAGIC-IRRI, ARTH150) ship as
reference descriptors for data generation. Anything else loads from a file
through :func:`load_network_file`.
"""

from __future__ import annotations

import os
from importlib import resources

from ..bn.bif import parse_discrete_network
from ..bn.gaussian import parse_gaussian_network
from ..bn.model import BnDescriptor

DISCRETE = ("cancer", "earthquake", "survey", "asia", "sachs", "child", "insurance", "water", "alarm")
CONTINUOUS = ("sachs-gauss", "child-gauss", "ecoli70", "magic-niab", "magic-irri", "arth150")
SMALL_DISCRETE = ("cancer", "earthquake", "survey", "asia", "sachs", "child", "insurance", "alarm")
BENCHMARK = SMALL_DISCRETE + ("water", "sachs-gauss", "child-gauss")

# (#nodes, #arcs) per network; published values except the two stand-ins
TABLE = {
    "cancer": (5, 4),
    "earthquake": (5, 4),
    "survey": (6, 6),
    "asia": (8, 8),
    "sachs": (11, 17),
    "child": (20, 25),
    "insurance": (27, 52),
    "water": (32, 66),
    "alarm": (37, 46),
    "sachs-gauss": (11, 17),
    "child-gauss": (20, 25),
    "ecoli70": (46, 70),
    "magic-niab": (44, 66),
    "magic-irri": (64, 102),
    "arth150": (107, 150),
}

_CACHE = {}


def available() -> tuple:
    return DISCRETE + CONTINUOUS


def descriptor(name: str) -> BnDescriptor:
    nodes, arcs = TABLE[name.lower()]
    return BnDescriptor(name.lower(), nodes, arcs)


def load_network(name: str):
    """Load a bundled network by (case-insensitive) name."""
    key = name.lower()
    if key not in TABLE:
        raise KeyError(f"unknown bundled network {name!r}; available: {', '.join(available())}")
    if key not in _CACHE:
        ext = "bif" if key in DISCRETE else "gbn"
        text = resources.files(__name__).joinpath(f"{key}.{ext}").read_text(encoding="utf-8")
        if key in DISCRETE:
            _CACHE[key] = parse_discrete_network(text, name=key)
        else:
            _CACHE[key] = parse_gaussian_network(text, name=key)
    return _CACHE[key]


def load_network_file(path):
    """Parse a network file; ``.bif`` is discrete, anything else the Gaussian descriptor."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stem = os.path.splitext(os.path.basename(path))[0]
    if path.lower().endswith(".bif") or text.lstrip().startswith(("network", "variable", "//")) and "variable" in text:
        return parse_discrete_network(text, name=stem)
    return parse_gaussian_network(text, name=stem)


def resolve_network(spec: str):
    """A bundled network name or a path to a network file."""
    if os.path.exists(spec):
        return load_network_file(spec)
    return load_network(spec)
