"""Edge detection by greedy placement of thin strips, steered by the
topological expansion of a Mumford-Shah type energy."""
from .detector import DetectionResult, choose_nmax, detect_static, detect_updating
from .functional import Params, anisotropic_score, energy_J, energy_Jeps, threshold, topo_decrease
from .geometry import EdgeSet, Strip, edge_indicator, enlargement, make_strip, rasterize_strip
from .grid import Grid, SolverConfig, SolverError, assemble, element_gradients, project_rhs, solve
from .image_io import Image, load_image, save_field, save_mask

__version__ = "0.1.0"
