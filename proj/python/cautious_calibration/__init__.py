"""Cautious lower-bound calibration of binary classifiers.

Thin python facade over the compiled core: exact binomial lower confidence
bounds, the sliding hypothesis-test estimator (sum and max-cp statistics),
classical calibration baselines, the risk-selection scenario, and the full
experiment harness.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__ as _core_doc  # noqa: F401
except ImportError:  # built in-tree without packaging
    from _core import *  # type: ignore # noqa: F401,F403

__version__ = "0.1.0"
