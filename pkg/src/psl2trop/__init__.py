"""Phase tropicalization of PSL2: Puiseux series, the VAL map and its images.

Submodules: ``puiseux``, ``mat2``, ``hyperbolic``, ``valuation``, ``lines``,
``surfaces``, ``certifier`` and the command line front end ``cli``.
"""

__version__ = "0.1.0"
