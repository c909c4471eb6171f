"""Bird pose estimation from 2D keypoints and silhouettes."""

from ._core import *  # noqa: F401,F403
from ._core import BirdposeError, __doc__  # noqa: F401

__version__ = "0.1.0"
