#!/usr/bin/env python3
"""
Run the slitforge command-line interface
"""

import logging
import os
import sys

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from slitforge.core.config import settings
from slitforge.core.errors import exit_code_for

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main() -> int:
    """Entry point; maps exceptions to exit codes 0/1/2/3/4."""
    from slitforge.cli.main import main as cli_main

    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
