"""Effective capacity of two-user uplink NOMA and OMA under delay-QoS exponents."""

from .capacity import (
    EcEstimate,
    PowerAllocation,
    QosExponent,
    Snr,
    all_ecs,
    beta_from_theta,
    ec1_noma_closed,
    ec1_noma_quadrature,
    ec2_high_snr_limit,
    ec2_noma_closed,
    ec2_noma_quadrature,
    ec_monte_carlo,
    ec_noma,
    ec_oma,
    ec_oma_closed,
    ec_oma_quadrature,
    rate_noma,
    rate_oma,
    simulate_ecs,
    sum_ec,
)
from .channel import ChannelRng, OrderedChannelPair
from .errors import AccuracyFailure, DomainError, NomaEcError, UnsupportedDomainError

__version__ = "0.1.0"
