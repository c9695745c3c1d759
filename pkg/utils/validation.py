"""
Validation utilities for configuration documents and input paths.
"""

# Standard library imports
import logging
import os
from typing import Any, Dict, Iterable, List, Optional

# Third-party imports
import jsonschema

# Local imports
from utils.error_handling import ValidationError

_NULLABLE_STRING = {"type": ["string", "null"]}

CONFIG_SCHEMA: Dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": -1},
        "paths": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "corpus": _NULLABLE_STRING,
                "synthetic": _NULLABLE_STRING,
                "lexicon": _NULLABLE_STRING,
                "rules": _NULLABLE_STRING,
                "matrix": _NULLABLE_STRING,
                "detector_model": _NULLABLE_STRING,
                "corrector_model": _NULLABLE_STRING,
                "output": {"type": "string"},
            },
        },
        "corpus": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "noise_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "dev_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "synth": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "profile": {"type": "string"},
                "substitution_only": {"type": "boolean"},
                "whitespace_noise": {"type": "boolean"},
            },
        },
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["dict", "ngram"]},
                "n_min": {"type": "integer", "minimum": 1},
                "n_max": {"type": "integer", "minimum": 1},
                "hash_bits": {"type": "integer", "minimum": 1, "maximum": 30},
                "epochs": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "use_context": {"type": "boolean"},
                "threshold": {"type": "number", "minimum": 0},
                "seed": {"type": "integer"},
            },
        },
        "corrector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["knn", "seq2seq"]},
                "embedding_size": {"type": "integer", "minimum": 1},
                "hidden_size": {"type": "integer", "minimum": 1},
                "diag_window": {"type": "integer", "minimum": 1},
                "beam_width": {"type": "integer", "minimum": 1},
                "max_output_len": {"type": "integer", "minimum": 0},
                "lambda_diag": {"type": "number", "minimum": 0},
                "lambda_cov": {"type": "number", "minimum": 0},
                "copy": {"type": "boolean"},
                "coverage": {"type": "boolean"},
                "epochs": {"type": "integer", "minimum": 1},
                "patience": {"type": "integer", "minimum": 0},
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
                "clip_norm": {"type": "number", "minimum": 0},
                "init_scale": {"type": "number", "exclusiveMinimum": 0},
                "use_context": {"type": "boolean"},
                "teacher_forcing": {"type": "boolean"},
                "seed": {"type": "integer"},
            },
        },
    },
}


def validate_config_document(document: Dict[str, Any]) -> bool:
    """
    Validate a raw configuration document against the schema.

    Args:
        document: Parsed TOML (or merged) configuration

    Returns:
        True if the document is valid

    Raises:
        ValidationError: If the document fails validation
    """
    try:
        jsonschema.validate(instance=document, schema=CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        location = ".".join(str(part) for part in e.absolute_path) or "<root>"
        error_msg = f"{location}: {e.message}"
        logging.error(f"Config validation failed at {error_msg}")
        raise ValidationError(error_msg) from e
    return True


def validate_paths_exist(paths: Dict[str, Optional[str]], required: Iterable[str] = ()) -> bool:
    """
    Check that every referenced path exists.

    Args:
        paths: Mapping of path role to path (None means unset)
        required: Roles that must be set

    Returns:
        True if all referenced paths exist

    Raises:
        ValidationError: If a required path is unset or a referenced path is missing
    """
    missing_roles: List[str] = [role for role in required if not paths.get(role)]
    if missing_roles:
        raise ValidationError(f"Required paths not set: {', '.join(missing_roles)}")

    missing_files = [
        f"{role}={path}" for role, path in paths.items() if path and not os.path.exists(path)
    ]
    if missing_files:
        error_msg = f"Referenced paths do not exist: {', '.join(missing_files)}"
        logging.error(error_msg)
        raise ValidationError(error_msg)

    return True
