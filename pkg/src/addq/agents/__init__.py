from .learners import (
    ADDQ,
    ALGORITHMS,
    Categorical,
    ClippedDoubleQ,
    DistributionalDoubleQ,
    DistributionalQ,
    DoubleQLearning,
    EnsembleBootstrappedQ,
    Learner,
    MaxminQ,
    QLearning,
    Quantile,
    RandomizedEnsembleQ,
    Scalar,
    Transition,
    WeightedDoubleQ,
)
from .schedules import (
    BETA_PRESETS,
    BetaSchedule,
    EpsGreedyLinear,
    Uniform,
    act,
    beta_from_rel_variance,
    beta_schedule,
    relative_variance,
    select_greedy,
    stepsize,
)
