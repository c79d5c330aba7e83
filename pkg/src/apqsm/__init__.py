"""APQ-SM link-level simulation, union bounds and power allocation for indoor VLC."""

from .channel import (ChannelMatrix, Geometry, SystemParams, build_channel_matrix,
                      channel_gain, reference_geometry)
from .modulation import ApqScheme, Codebook, PowerVector, pam_levels

__version__ = "0.1.0"

__all__ = [
    "ApqScheme", "ChannelMatrix", "Codebook", "Geometry", "PowerVector", "SystemParams",
    "build_channel_matrix", "channel_gain", "pam_levels", "reference_geometry",
]
