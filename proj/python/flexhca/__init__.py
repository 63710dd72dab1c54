"""Flexibility-aware hosting capacity analysis.

Thin Python face of the C++ core: capacity series, curtailment and delay
solvers, network reduction, tail theory, and synthetic fixtures.
"""

try:
    from ._flexhca import *  # noqa: F401,F403  (installed layout)
    from ._flexhca import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout used by ctest
    from _flexhca import *  # noqa: F401,F403
    from _flexhca import __version__  # noqa: F401
