"""
psp - command-line entry point
"""

import logging
import sys
from typing import List, Optional

from psp.config import config


def setup_logging(debug: Optional[bool] = None):
    """Root logging to stderr so stdout stays machine-readable"""
    debug = config.PSP_DEBUG if debug is None else debug
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    # matplotlib is chatty at DEBUG
    logging.getLogger('matplotlib').setLevel(logging.WARNING)


def main(argv: Optional[List[str]] = None) -> int:
    from psp.cli import run

    setup_logging()
    return run(argv)


if __name__ == '__main__':
    sys.exit(main())
