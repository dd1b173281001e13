#!/usr/bin/env python3
"""
Demo input seeding script for the QROM advice lab.

Writes a toy YZ code, a one-query OWF strategy file and one experiment
config per registered experiment, all referenced by the docs.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

# Add the project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from qrom_lib.adversary import LocalUnitary, OracleCall, StrategyCircuit, challenge_key  # noqa: E402
from qrom_lib.game import YzCode, save_code  # noqa: E402

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def toy_code() -> YzCode:
    """A binary code of length 3 with four codewords."""
    return YzCode(3, 2, ((0, 0, 0), (1, 1, 1), (0, 1, 1), (1, 0, 0)))


def owf_inverter_strategy() -> Dict[str, Any]:
    """
    One-query inverter for OWF with N = M = 2.

    Copies the advice guess a into x, queries y = H(a), and flips a when
    H(a) differs from the challenge. Since the challenge is an image, one of
    the two inputs always maps to it.
    """
    copy = np.zeros((4, 4))
    for a in range(2):
        for x in range(2):
            copy[a * 2 + (x ^ a), a * 2 + x] = 1.0
    programs = {}
    for c in range(2):
        fix = np.zeros((4, 4))
        for a in range(2):
            for y in range(2):
                fix[(a ^ int(y != c)) * 2 + y, a * 2 + y] = 1.0
        programs[challenge_key(c)] = (
            LocalUnitary(copy, ("ans", "x")),
            OracleCall("x", "y"),
            LocalUnitary(fix, ("ans", "y")),
        )
    data = StrategyCircuit(programs).to_dict()
    data.update({"subsystems": [["ans", 2], ["x", 2], ["y", 2]], "advice": ["ans"], "answer": "ans"})
    return data


def demo_configs(code_path: str, strategy_path: str) -> List[Dict[str, Any]]:
    return [
        {"experiment": "verify-lemmas", "params": {"count": 20}},
        {"experiment": "altmeas-sweep", "game": "owf", "n": 2, "m": 2, "params": {"k_max": 6}},
        {"experiment": "altmeas-sweep", "game": "owf", "n": 2, "m": 2,
         "strategy": strategy_path, "advice": "optimal", "params": {"k_max": 6, "samples": 2000}},
        {"experiment": "conditional-monotonicity", "params": {"instances": 100, "t_max": 8}},
        {"experiment": "spectra-export", "game": "owf", "n": 2, "m": 2,
         "strategy": strategy_path, "advice": "optimal"},
        {"experiment": "reduction-equality", "game": "owf", "n": 2, "m": 2,
         "strategy": strategy_path, "params": {"ks": [1, 3, 5]}},
        {"experiment": "bound-calculator",
         "params": {"which": "owf", "s": 4, "t": 2, "n": 1024, "m": 1024}},
        {"experiment": "bound-calculator",
         "params": {"which": "main-decision", "nu_formula": "prg", "s": 4, "t": 2, "n": 4096,
                    "t_samp": 1, "t_verify": 0, "refine": True}},
        {"experiment": "bound-sweep",
         "params": {"which": "prg", "grid": {"s": [1, 4, 16, 64], "t": [1, 2, 4], "n": 1024}}},
        {"experiment": "advice-optimum-curve", "game": "owf", "n": 2, "m": 2,
         "params": {"s_values": [0, 1, 2]}},
        {"experiment": "bfqrom-estimate", "game": "owf", "n": 2, "m": 2, "params": {"p": 1, "t": 0}},
        {"experiment": "separation-report", "game": "owf", "n": 2, "m": 2,
         "params": {"s_values": [1, 2]}},
        {"experiment": "yz-counting", "game": f"yz:{code_path}", "params": {"zeta": 0.5, "p": 2}},
    ]


def save_json(data: Any, output_path: Path) -> bool:
    """
    Write one JSON file.

    Args:
        data: JSON-serializable content.
        output_path: Destination.

    Returns:
        True if successful.
    """
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        output_path.write_text(json.dumps(data, indent=2))
        logger.info(f"Wrote {output_path}")
        return True
    except Exception as e:
        logger.error(f"Failed to write {output_path}: {e}")
        return False


def main(root: str = ".") -> bool:
    """Generate every demo input under ``root``."""
    logger.info("Starting demo input seeding")
    base = Path(root)
    code_path = base / "inputs" / "yz_toy.json"
    strategy_path = base / "inputs" / "owf_inverter.json"
    try:
        save_code(toy_code(), str(code_path))
        logger.info(f"Wrote {code_path}")
        ok = save_json(owf_inverter_strategy(), strategy_path)
        seen: Dict[str, int] = {}
        for cfg in demo_configs(str(code_path), str(strategy_path)):
            name = cfg["experiment"]
            seen[name] = seen.get(name, 0) + 1
            suffix = "" if seen[name] == 1 else f"_{seen[name]}"
            ok = save_json(cfg, base / "configs" / f"{name.replace('-', '_')}{suffix}.json") and ok
        logger.info("Demo input seeding completed" if ok else "Demo input seeding finished with errors")
        return ok
    except Exception as e:
        logger.error(f"Demo input seeding failed: {e}")
        return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
