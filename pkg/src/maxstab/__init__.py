"""Max-stable dependence models, their coefficient algebra and orthant orders."""
__version__ = "0.1.0"
