"""Polar codes for binary-input multiple access channels with joint SC decoding."""
from .base_code import (ChainLattice, CoverReport, DecodingOrder, adjacencies, chain_profile,
                        count_orders, covering_bound, covering_radius_estimate,
                        enumerate_orders, nearest_order, rate_tuple, reachable, transpose)
from .channels import (BinaryInputDMC, MacDMC, RegionConstraints, bec, bhattacharyya, bsc,
                       derived_two_user_mac, gaussian_mac_quantized, load_channel,
                       mac_mutual_information, mutual_information, noiseless_mac,
                       on_dominant_face, product_mac, region_constraints,
                       sample_dominant_face, save_channel)
from .decoder import ChannelObservation, DecodeResult, decode, genie_decode
from .errors import BudgetExceeded, ChannelError, PreconditionError, SamplingError
from .mac_code import (MacPolarSpec, construct, encode, expand_order, fer_union_bound,
                       separate_split_profile)
from .polarization import (bit_channel_exact, good_set, monte_carlo_z, polar_transform,
                           sc_decode)
from .sim import FerReport, GaussianSampler, DiscreteSampler, SimConfig, simulate

__version__ = "0.1.0"
