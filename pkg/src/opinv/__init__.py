"""Invariants of linear differential operators under symplectomorphisms.

Modules: ``polyalg`` (exact polynomials and linear maps), ``transvect``
(transvectants), ``invar`` (trace invariants, orbit dimensions),
``equiv`` (signature comparison, orbit matching), ``connect``
(connections, quantization, Wagner connections), ``models`` (model
surfaces) and ``cli``.
"""

__version__ = "0.1.0"

from .polyalg import HomogeneousPoly, LinearMap, Polynomial  # noqa: F401
