"""Geometry of eigenstates of Hermitian and non-Hermitian parameter families."""

from .eigensys import (AssociatedState, BiorthogonalSystem, JordanChain, associated_state,
                       biorthogonalize, eig, jordan_chain)
from .eppoints import (EPLocation, PuiseuxExpansion, ScalingFit, locate_ep,
                       near_ep_metric_scaling, puiseux_expand)
from .errors import EigengeoError
from .geometry import (MetricTensor, QuantumGeometricTensor, complex_metric_perturbative,
                       cramer_rao_bound, fubini_study_metric_fd, hermitian_metric_perturbative,
                       quantum_geometric_tensor)
from .models import (AffineFamily, BlochRotationFamily, ClassicalModel, HamiltonianFamily,
                     PTFamily, PTModel, SliceFamily, load_classical, load_family, parse_family)
from .thermo import canonical, curvature_beta, fisher_metric_beta, thermo_uncertainty

__version__ = "0.1.0"
