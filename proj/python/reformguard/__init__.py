"""Reformulation-based defense against textual adversarial and backdoor attacks."""

from ._reformguard import *  # noqa: F401,F403
from ._reformguard import __doc__  # noqa: F401

__version__ = "0.1.0"
