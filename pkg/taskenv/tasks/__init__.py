"""Task algebra: goals, problems, tasks, composition, abstraction and variants"""

from .abstraction import abstract, concretize, scale_interval
from .composition import compose_all, decompose_serial, serial_compose
from .problems import (
    FAILURE,
    GOAL,
    AtomicProblem,
    Conjunction,
    Disjunction,
    Goal,
    Negation,
    Problem,
    SerialProblem,
    Stage,
    conjoin,
    disjoin,
    iter_goals,
    negate,
    normalize,
    problem_variables,
)
from .task import Communication, EnergyBudget, Task, trivial_task
from .variants import (
    ChannelPatch,
    Distribution,
    StartPerturbation,
    VariantSpec,
    expand_variants,
    generate_variants,
)

__all__ = [
    "GOAL",
    "FAILURE",
    "Goal",
    "AtomicProblem",
    "Conjunction",
    "Disjunction",
    "Negation",
    "SerialProblem",
    "Stage",
    "Problem",
    "conjoin",
    "disjoin",
    "negate",
    "normalize",
    "iter_goals",
    "problem_variables",
    "Communication",
    "EnergyBudget",
    "Task",
    "trivial_task",
    "serial_compose",
    "compose_all",
    "decompose_serial",
    "abstract",
    "concretize",
    "scale_interval",
    "Distribution",
    "StartPerturbation",
    "ChannelPatch",
    "VariantSpec",
    "generate_variants",
    "expand_variants",
]
