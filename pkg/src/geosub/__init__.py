"""Counting, compound and multiplicative processes driven by a geometric-time subordinated Poisson process."""

from . import errors, gcp, gscpp, gsmpp, gspp, jumps, mc, numerics, shock, spp, subordinators
from .errors import *  # noqa: F401,F403
from .gcp import *  # noqa: F401,F403
from .gscpp import *  # noqa: F401,F403
from .gsmpp import *  # noqa: F401,F403
from .gspp import *  # noqa: F401,F403
from .jumps import *  # noqa: F401,F403
from .mc import *  # noqa: F401,F403
from .numerics import *  # noqa: F401,F403
from .shock import *  # noqa: F401,F403
from .spp import *  # noqa: F401,F403
from .subordinators import *  # noqa: F401,F403

__version__ = "0.1.0"
