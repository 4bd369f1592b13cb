"""Linearized Vlasov-Poisson-Boltzmann (hard sphere) numerics: spectrum, Green's function
waves, Picard iterates and convolution estimates."""
from .collision import CollisionOperator, assemble_L
from .config import RunConfig, load_config
from .velocity import VelocityBasis, build_basis

__all__ = ["CollisionOperator", "RunConfig", "VelocityBasis", "assemble_L", "build_basis",
           "load_config"]
__version__ = "0.1.0"
