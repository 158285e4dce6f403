"""Task programs: sequence labeling, detection, entity-relation, parsing."""

from .depparse import (
    DependencyParserTask,
    DepSentence,
    ParserState,
    dep_gold_action,
    dep_trans,
    dep_valid_actions,
    read_dependency_corpus,
    run_dep_parser,
)
from .detection import DetectionTask, run_detection
from .entrel import (
    EntityRelationOutput,
    EntityRelationTask,
    RelationConstraintTable,
    find_valid_relations,
    run_entity_relation,
)
from .sequence import (
    BIOConstraint,
    BIOTask,
    SequenceTask,
    SequenceTaskConfig,
    bio_valid_labels,
    run_sequence,
)

__all__ = [
    "BIOConstraint",
    "BIOTask",
    "DepSentence",
    "DependencyParserTask",
    "DetectionTask",
    "EntityRelationOutput",
    "EntityRelationTask",
    "ParserState",
    "RelationConstraintTable",
    "SequenceTask",
    "SequenceTaskConfig",
    "bio_valid_labels",
    "dep_gold_action",
    "dep_trans",
    "dep_valid_actions",
    "find_valid_relations",
    "read_dependency_corpus",
    "run_dep_parser",
    "run_detection",
    "run_entity_relation",
    "run_sequence",
]
