"""Heuristic goal-tracking reward."""

from __future__ import annotations

import math

GOAL_RADIUS = 0.5
FRAME_TIME = 1.0 / 30.0


def goal_reward(root_dx: float, target_velocity: float, dist_to_goal: float,
                radius: float = GOAL_RADIUS, frame_time: float = FRAME_TIME) -> float:
    """exp(-3 * ||v - v*||^2 / ||v*||^2) outside the goal radius, else 1.

    ``root_dx`` is the root's horizontal displacement over one control frame;
    ``target_velocity`` is the signed preferred velocity toward the goal.
    """
    if target_velocity == 0.0:
        raise ValueError("preferred speed must be nonzero")
    if dist_to_goal <= radius:
        return 1.0
    v = root_dx / frame_time
    err = (v - target_velocity) ** 2 / target_velocity**2
    return math.exp(-3.0 * err)
