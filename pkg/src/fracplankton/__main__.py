"""Allow ``python -m fracplankton``."""

from .cli import main

main()
