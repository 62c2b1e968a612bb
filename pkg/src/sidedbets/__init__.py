"""Exact finite-depth martingales, sided betting strategies and staged adversaries."""
from .core import *  # noqa: F401,F403
from .core import __all__ as _core_all
from .constructions import *  # noqa: F401,F403
from .constructions import __all__ as _con_all
from .adversary import *  # noqa: F401,F403
from .adversary import __all__ as _adv_all
from .errors import *  # noqa: F401,F403
from .errors import __all__ as _err_all

__version__ = "0.1.0"
__all__ = [*_core_all, *_con_all, *_adv_all, *_err_all]
