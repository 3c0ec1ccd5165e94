"""Main entry point for the chaos-surrogate command line."""

import os
import sys
import logging
from dotenv import load_dotenv

# Configure logging early so module loggers (logger.info) are visible in terminal
logging.basicConfig(
    level=os.environ.get("SURROGATE_LOG_LEVEL", "INFO"),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)

# Load environment variables from .env file before any other imports
load_dotenv()

# Add project root to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.cli.app import main  # noqa: E402


def run() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
