# -*- coding: utf-8 -*-
"""
@description: Command-line entry point.

usage:
python bethelab.py pin --config configs/pin_potts.json --out outputs-pin --seeds 0..99
python bethelab.py bethe --config configs/bethe_tree.json --exact-budget 65536
"""

import json
import sys
from typing import List, Optional

from loguru import logger
from transformers import HfArgumentParser

from experiments import ExperimentConfig, emit_report, list_experiments, run_experiment


def load_config_file(path: str) -> dict:
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"Unknown config keys in {path}: {unknown}")
    return data


def parse_config(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """Defaults, then the JSON file, then explicit command-line values."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = HfArgumentParser(ExperimentConfig)
    parser.add_argument("experiment", choices=list_experiments(), help="Experiment to run")
    parser.add_argument("--config", type=str, default=None, help="JSON experiment config")
    known, _ = parser.parse_known_args(argv)
    if known.config:
        file_values = load_config_file(known.config)
        if file_values.get("name", known.experiment) != known.experiment:
            logger.warning(f"Config names experiment {file_values['name']}, running {known.experiment}")
        parser.set_defaults(**file_values)
    config, extra = parser.parse_args_into_dataclasses(args=argv)
    config.name = extra.experiment
    return config


def main():
    config = parse_config()
    logger.info(f"Experiment args: {config}")
    results = run_experiment(config)
    paths = emit_report(results, config)
    logger.info(f"Report files: {paths}")


if __name__ == "__main__":
    main()
