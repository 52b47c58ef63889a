# main.py
"""
Main entry point for fracwell
"""
import logging
import os
import sys

# Add the current directory to the Python path to ensure imports work
current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from cli import parse_and_dispatch
from config import ExitCodes, Settings

logger = logging.getLogger(Settings.APP_NAME)


def main(argv=None):
    """Command line entry point"""
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(name)s: %(message)s")
    try:
        return parse_and_dispatch(argv)
    except KeyboardInterrupt:
        logger.warning("interrupted by user")
        return ExitCodes.INTERRUPTED
    except Exception as e:
        logger.exception("unexpected error: %s", e)
        return ExitCodes.USAGE


if __name__ == "__main__":
    sys.exit(main())
