"""Robust force control with disturbance and reaction-torque observers.

State-space construction of the DOb/RTOb force loop, transfer-function
extraction, root locus and time-domain simulation.
"""

from .errors import RfcError
from .pipeline import Design, ObserverSpec, conventional_design
from .plant import Environment, ServoParams

__all__ = ["Design", "Environment", "ObserverSpec", "RfcError", "ServoParams", "conventional_design"]
__version__ = "0.1.0"
