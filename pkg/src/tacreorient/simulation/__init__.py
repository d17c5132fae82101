from .objects import (
    CableDisturbance,
    Environment,
    ObjectTemplate,
    PatchParams,
    box_outline,
    make_template,
    SUITE_IDS,
    make_object_suite,
    suite_template,
    superellipse_outline,
)
from .log import CYCLE_COLUMNS, CycleRecord, EpisodeLog, MalformedLog, read_episode_log
from .world import (
    HAND_FROM_LEFT,
    HAND_FROM_RIGHT,
    Diverged,
    ObjectDropped,
    SimulationError,
    SimWorld,
    TactileFrame,
    accumulated_tangential_slip,
    object_orientation_error,
    step,
)
