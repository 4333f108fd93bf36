"""Allow running the CLI as ``python -m gridcoher``."""

import sys

from .cli import main

sys.exit(main())
