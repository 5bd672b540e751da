from .gpe import GpeProblem, build_gpe, harmonic_potential, load_potential_csv, save_potential_csv
from .heaviside import HeavisideTraceProblem, laplacian_1d
from .scalar_sine import ScalarSineProblem

__all__ = [
    "ScalarSineProblem",
    "GpeProblem",
    "build_gpe",
    "harmonic_potential",
    "load_potential_csv",
    "save_potential_csv",
    "HeavisideTraceProblem",
    "laplacian_1d",
]
