"""funcframe: retarget demonstrated tool trajectories to new tools.

The pipeline detects an object-centered target frame, abstracts tools as
(function, grasp, center) keypoint triples, builds function frames,
aligns the test tool to the demonstrated function keyframe via
interaction primitives, warps the demonstration reference, and solves a
constrained pose-trajectory optimization whose output maps to
end-effector actions through a grasp pose.
"""

from .alignment import (AlignmentContext, AlignmentResult, RefinementConfig,
                        Verdict, geometric_evaluator, initial_alignment,
                        refine_alignment)
from .execution import (EndEffectorTrajectory, GraspSpec, chain_plans,
                        sample_grasp_poses, to_end_effector)
from .frames import (Frame, FrameTrajectory, build_frame_trajectory,
                     build_function_frame, detect_target_frame)
from .geometry import (Pose, exp_so3, fit_rigid_transform, log_so3,
                       rotation_about_axis, rotation_between)
from .keypoints import (FunctionPlan, Keypoints, KeypointTrajectory,
                        center_from_points, propagate_keypoints,
                        relative_transforms_from_tracks, to_target_frame)
from .metrics import KeypointAnnotationSet, akd, ap_at
from .pipeline import run_pipeline
from .scenario import Scenario, load_scenario, save_scenario, save_trajectory
from .synth import generate_scenario
from .trajopt import (Obstacle, OptimConfig, Problem, Solution, WarpSpec,
                      check_gradient, evaluate_cost, point_box_distance,
                      solve, warp_reference)

__version__ = "0.1.0"
