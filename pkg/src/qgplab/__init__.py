"""Numerical laboratory for adiabatic conditions and the quantum geometric
potential (QGP) in N-level quantum systems.

Layers, bottom-up: ``linalg`` (dense Hermitian algebra), ``models``
(Hamiltonian families), ``frames`` (gauge-continuous eigenframes),
``evolve`` (Schrodinger and coefficient-frame propagation), ``qgp``
(geometric potential, curvature, loop identities), ``conditions``
(adiabaticity criteria and the Pi-matrix machinery), ``metrics``
(closed-form oracles), ``cli`` (scenario runner).
"""

from . import conditions, evolve, frames, linalg, metrics, models, numerics, qgp
from .errors import QgplabError

__all__ = [
    "conditions",
    "evolve",
    "frames",
    "linalg",
    "metrics",
    "models",
    "numerics",
    "qgp",
    "QgplabError",
]

__version__ = "0.1.0"
