"""Quantum states of light propagated through random multiple-scattering media."""

__version__ = "0.1.0"

from .states import (  # noqa: E402
    Coherent,
    Fock,
    ModeState,
    ProductInput,
    SqueezedVacuum,
    Thermal,
    Vacuum,
    joint_normal_moment,
    mean_amplitude,
    normal_moment,
    photon_stats,
)
from .network import (  # noqa: E402
    AnalyticModel,
    TabulatedModel,
    TransmissionMatrix,
    correlation_values,
    load_tabulated,
    sample_diffusive,
    sample_unitary,
)
from .correlators import (  # noqa: E402
    ObservableGrid,
    SecondMoments,
    coincidence,
    mean_photon,
    photon_correlation,
    propagate_second_moments,
    qvp,
    speckle_map,
)
from .ensemble import (  # noqa: E402
    DiagramBreakdown,
    DiffusiveSampler,
    EnsembleCurvePoint,
    averaged_c2,
    averaged_coincidence_contraction,
    averaged_qvp,
    monte_carlo_average,
    sweep,
)
