"""
coopreg

Cooperative output regulation of heterogeneous multi-agent systems over
switching networks: solvability checks, gain synthesis and closed-loop
simulation, exposed as a CLI and a FastAPI service.
"""

from app.core.version import __version__
