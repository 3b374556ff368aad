"""Allow `python -m robustrisk`."""

import sys

from robustrisk.cli import main

sys.exit(main())
