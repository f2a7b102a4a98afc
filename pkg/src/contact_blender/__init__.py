"""Numerical laboratory for a contact blender: chart model, perturbed family,
blender boxes and axiom checks, suspensions and transitivity detection."""

from .blender import BlenderBox, BlenderVerifier, VerticalDisk
from .chart import ChartParams
from .config import RunConfig
from .flows import HamiltonianFlow, ProfileH
from .model import BlenderModel, ModelParams
from .report import Record, Report

__all__ = ["BlenderBox", "BlenderModel", "BlenderVerifier", "ChartParams", "HamiltonianFlow", "ModelParams",
           "ProfileH", "Record", "Report", "RunConfig", "VerticalDisk"]
__version__ = "0.1.0"
