import logging
import sys

from app.cli import run
from app.core.config import settings


def main() -> int:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
