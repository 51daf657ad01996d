from .bif import BifParseError, parse_discrete_network, write_discrete_network
from .gaussian import GaussianParseError, parse_gaussian_network, write_gaussian_network
from .model import BnDescriptor, DiscreteBn, GaussianBn, NetworkValidationError
from .sampling import NetworkTooLargeError, exact_marginal, forward_sample, joint_distribution

__all__ = [
    "BifParseError",
    "BnDescriptor",
    "DiscreteBn",
    "GaussianBn",
    "GaussianParseError",
    "NetworkTooLargeError",
    "NetworkValidationError",
    "exact_marginal",
    "forward_sample",
    "joint_distribution",
    "parse_discrete_network",
    "parse_gaussian_network",
    "write_discrete_network",
    "write_gaussian_network",
]
