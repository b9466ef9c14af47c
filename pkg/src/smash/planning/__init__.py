from .grounding import ActionFilter, filter_actions, ground, universe
from .layer import PlanningResult, planning
from .model import (
    ActionModel,
    GoalCondition,
    GroundAction,
    ModelError,
    Plan,
    goal_formula,
    instantiate,
    project,
)
from .pddl import EmissionError, PDDLError, emit_pddl, parse_pddl
from .search import (
    PlanningFailure,
    SearchLimitExceeded,
    SearchLimits,
    Unsolvable,
    Validation,
    plan_for_goal,
    validate_plan,
)

__all__ = [
    "ActionFilter",
    "ActionModel",
    "EmissionError",
    "GoalCondition",
    "GroundAction",
    "ModelError",
    "PDDLError",
    "Plan",
    "PlanningFailure",
    "PlanningResult",
    "SearchLimitExceeded",
    "SearchLimits",
    "Unsolvable",
    "Validation",
    "emit_pddl",
    "filter_actions",
    "ground",
    "goal_formula",
    "instantiate",
    "parse_pddl",
    "plan_for_goal",
    "planning",
    "project",
    "universe",
    "validate_plan",
]
