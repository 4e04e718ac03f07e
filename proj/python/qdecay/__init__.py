"""Monte Carlo quantum-trajectory simulator for spontaneous decay."""

from ._core import (
    Event,
    QdecayError,
    QubitState,
    RngStream,
    TrajectoryRecord,
    decay_times,
    density_Da,
    density_Df,
    homodyne,
    moments_a,
    normalize,
    occupation,
    occupation_drops,
    photon_packet_length,
    rabi,
    run_decay,
    sigma_x_expectation,
    stats,
    survival_probability,
)

__all__ = [
    "Event",
    "QdecayError",
    "QubitState",
    "RngStream",
    "TrajectoryRecord",
    "decay_times",
    "density_Da",
    "density_Df",
    "homodyne",
    "moments_a",
    "normalize",
    "occupation",
    "occupation_drops",
    "photon_packet_length",
    "rabi",
    "run_decay",
    "sigma_x_expectation",
    "stats",
    "survival_probability",
]
