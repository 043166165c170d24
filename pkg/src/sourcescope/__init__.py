"""Simulation and source recovery for forced abstract IVPs.

The package forward-simulates mild solutions of u' = Au + F with a
multiplication-operator generator, synthesizes three families of noisy
weak measurements, recovers catalyst intake times, decay rates, and
content coefficients with two detectors, and certifies every recovery
against the theoretical error bounds.
"""

from .errors import (CertificateError, DataError, DimensionError,
                     InputError, ModelError, RangeError, ScenarioError,
                     SourceScopeError)
from .hilbert import (DEFAULT_NODES, GridFunction, Quadrature, grid, inner,
                      integrate_time, norm)
from .dynamics import (BackgroundSource, Catalyst, MultiplicationGenerator,
                       SourceModel, Trajectory, catalyst_response,
                       evolve_state, zero_background)
from .sampling import (DictStreams, MeasurementConfig, MeasurementRecord,
                       SampledStreams, Sampler, dump_measurements,
                       oracle_delta_laplace, oracle_m_expansion, sample_m,
                       sample_laplace, sample_s)
from .alg1 import (Alg1Params, DetectionEvent, estimate_rho_alg1, run_alg1,
                   threshold_q, threshold_q_tilde)
from .alg2 import (Alg2Event, Alg2Params, lipschitz_local, monotone_gap,
                   prony_rate_limit_check, run_alg2, thresholds_alg2)
from .bounds import (BoundCertificate, BoundInputs, bound_case_props,
                     bound_thm1_coeff, bound_thm1_rate, bound_thm2_coeff,
                     bound_thm2_coeff_linear, bound_thm2_rate,
                     certify_alg1, certify_alg2,
                     make_certificate, match_events, v_k_term)
from .scenarios import (Scenario, build_scenario, load_scenario,
                        paper_scenario, random_scenario)
from .bench import (RunOutcome, SweepResult, emit_outputs, run_scenario,
                    run_sweep)

__version__ = "0.1.0"
