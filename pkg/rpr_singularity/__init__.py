"""
Singularity distances of planar 3-RPR and 3-RRR parallel manipulators under
extrinsic metrics, computed by homotopy continuation.
"""

__version__ = "0.1.0"
