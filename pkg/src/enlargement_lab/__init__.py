"""Exact enlargement-of-filtration computations on finite filtered spaces."""

__version__ = "0.1.0"

from .errors import EnlargementLabError  # noqa: E402
from .random_times import RandomTime, associated_processes, classify, thin_thick_decompose  # noqa: E402
from .space import FilteredSpace, build_space  # noqa: E402

__all__ = [
    "EnlargementLabError",
    "FilteredSpace",
    "RandomTime",
    "associated_processes",
    "build_space",
    "classify",
    "thin_thick_decompose",
    "__version__",
]
