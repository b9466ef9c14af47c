"""Value-aware smart home agent: value and goal reasoning, STRIPS planning, acting over a device bus."""

from .acting import Refinement, RefinementError, Signal, acting, refine
from .goals import GoalActivationRule, GoalState, GoalStatusSet, Source, Status, goal_reasoning, is_legal
from .logic import Atom, BeliefBase, Term, holds, parse_atom, parse_formula
from .planning import ActionModel, GoalCondition, SearchLimits, plan_for_goal, planning, validate_plan
from .runtime import Agent, AgentConfig, CycleTrace, TraceSink, run_agents
from .scenario import Scenario, ScenarioError, bundled, load_scenario, parse_scenario, run_scenario
from .values import ImpactRule, ImportanceOrder, Value, ValueOrderingRule, value_reasoning

__version__ = "0.1.0"

__all__ = [
    "ActionModel",
    "Agent",
    "AgentConfig",
    "Atom",
    "BeliefBase",
    "CycleTrace",
    "GoalActivationRule",
    "GoalCondition",
    "GoalState",
    "GoalStatusSet",
    "ImpactRule",
    "ImportanceOrder",
    "Refinement",
    "RefinementError",
    "Scenario",
    "ScenarioError",
    "SearchLimits",
    "Signal",
    "Source",
    "Status",
    "Term",
    "TraceSink",
    "Value",
    "ValueOrderingRule",
    "acting",
    "bundled",
    "goal_reasoning",
    "holds",
    "is_legal",
    "load_scenario",
    "parse_atom",
    "parse_formula",
    "parse_scenario",
    "plan_for_goal",
    "planning",
    "refine",
    "run_agents",
    "run_scenario",
    "validate_plan",
    "value_reasoning",
]
