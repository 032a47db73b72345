"""Exact k-isotropic minimal surfaces with planar ends and their
Moebius-geometric certification toolkit."""

__version__ = "0.1.0"
