"""Square Sierpinski carpets, their discrete carpet modulus, and rigidity experiments."""

__version__ = "0.1.0"

from .carpet import CarpetSpec, Family, circle_catalog, generate  # noqa: E402
from .carpet_modulus import PathFamilySpec, carpet_modulus  # noqa: E402
from .grid_modulus import PathProblem, discrete_modulus  # noqa: E402

__all__ = ["CarpetSpec", "Family", "PathFamilySpec", "PathProblem", "carpet_modulus",
           "circle_catalog", "discrete_modulus", "generate", "__version__"]
