"""Channel simulation with limited description and common randomness.

Rate-region computation, finite-length random-code experiments and a
coordinated-play layer, all on finite alphabets with information in bits.
"""
__version__ = "0.1.0"

from .errors import (CapExceededError, ChansimError, ConsistencyError, InfeasibleError, ValidationError,
                     ZeroProbabilityError)
from .info_measures import (binary_entropy, conditional_mutual_information, entropy, mutual_information,
                            total_variation)
from .prob_core import (Channel, JointDist, Pmf, TripleDist, condition, iid_prob, joint_from_markov, make_pmf,
                        make_rng, marginal, sample, split_rng)
from .rate_region import (BoundaryCurve, EpsilonParams, OptimizerOptions, ProblemSpec, RatePoint,
                          RegionCertificate, boundary_curve, check_membership, conditional_common_information,
                          epsilon_membership, g_epsilon, min_r1_at_r2, wyner_common_information)
from .bec_analytic import BecCascadeParams, bec_boundary, bec_channel, bec_r1_at_r2, cascade_triple
from .channel_sim import (Codebook, ConverseReport, InducedDist, SimulationCode, decode_sample, draw_codebook,
                          encoder_posterior, induced_distribution_exact, simulate_batch, softcover_tv,
                          verify_converse)
from .game_coord import (Game, GameOptions, PayoffReport, TimeSharingStrategy, r0_curve, r0_upper,
                         timeshare_payoff, worst_case_payoff)
