"""Fixed-wing VTOL flight simulation and adaptive control.

A deterministic 6-DOF simulator plus the control stack it exercises: a
linear-in-parameters force model driven by airflow sensing, composite
parameter adaptation, lift-prioritized force allocation, and a scenario
runner reproducing fan-array wind-step experiments at desk scale.
"""

from ._core import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
