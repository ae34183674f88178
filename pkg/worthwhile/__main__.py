import sys

from worthwhile.cli import main


if __name__ == "__main__":
    sys.exit(main())
