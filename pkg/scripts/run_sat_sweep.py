#!/usr/bin/env python3
"""Desk-scale MMFR-versus-satellite-count sweep with the default config."""

import sys
from pathlib import Path

from leo_rsma.cli import main

CONFIG = Path(__file__).parent / "desk_config.json"

if __name__ == "__main__":
    sys.exit(main(["sat-sweep", "--config", str(CONFIG), "--workers", "2",
                   "--variants", "rsma-scsi,sdma-scsi,rsma-noncoop",
                   *sys.argv[1:]]))
