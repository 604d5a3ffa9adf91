"""Sensor-suite design for 2D landmark SLAM.

Suites are scored by the log-determinant of the SLAM information matrix
and searched under a budget with greedy, cost-benefit, and
failure-resilient strategies.
"""

__version__ = "0.1.0"

from .world import (Landmark, Pose2, Scenario, ScenarioError, TimePeriod, bundled_scenario,
                    load_scenario, save_scenario, synth_linear_scenario, synth_loop_scenario,
                    time_periods)
from .sensors import (MountedSensor, SensorConfigError, SensorLibrary, SensorModel,
                      build_default_library, load_library, measurement_sigmas, save_library,
                      stereo_range_sigma, visible)
from .slamgraph import (EvalScore, Evaluator, LinearSystem, NoiseConfig, Schedule,
                        SingularSystemError, SolveReport, build_system, evaluate,
                        log_det_information, simulate_and_solve)
from .selection import (GreedyTrace, ParetoPoint, ResiliencePlan, Selection, crippled_score,
                        exhaustive, greedy, pareto_front, resilience_report, resilient)
