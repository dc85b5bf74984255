#!/usr/bin/env python3
"""Desk-scale MMFR-versus-power sweep with the default experiment config."""

import sys
from pathlib import Path

from leo_rsma.cli import main

CONFIG = Path(__file__).parent / "desk_config.json"

if __name__ == "__main__":
    sys.exit(main(["power-sweep", "--config", str(CONFIG), "--workers", "2",
                   *sys.argv[1:]]))
