"""margolab: a laboratory for reversible block cellular automata.

Classical and quantum dynamics on even-sided tori under the two-phase block
update scheme, exhaustive search for complement configurations that implement
a chosen operation on a target region, and density-level ("macroscopic")
constraint experiments showing that shift-insensitive specifications cannot
pin down a localized operation.
"""

__version__ = "0.1.0"

from .lattice import (
    Alphabet,
    BINARY,
    Cell,
    Configuration,
    Region,
    RegionConfig,
    Torus,
    ValidationError,
    complement_region,
    config_from_text,
    config_to_text,
    make_config,
    patch,
    restrict,
    shift,
    shift_region,
)
from .rules import (
    BlockRule,
    BlockShape,
    RuleParseError,
    RuleValidationError,
    emit_rule,
    identity_rule,
    invert,
    parse_rule,
    rule_hash,
    validate_rule,
)
from .engine import (
    LightCone,
    Phase,
    Trajectory,
    evolve,
    evolve_back,
    light_cone,
    step,
    trajectory,
)
from .universality import (
    EnumerationCapError,
    Program,
    RegionMap,
    SearchBudget,
    SearchOutcome,
    cellwise_map,
    identity_map,
    implements,
    induced_map,
    search_program,
    universality_survey,
)
from .macro import (
    MacroConstraintSet,
    NoGoResult,
    NoGoWitness,
    Partition,
    densities,
    no_go_witness,
    overlap_deficit,
    satisfies,
    shift_robustness,
)
