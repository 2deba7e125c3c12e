import sys

from bistable_fronts.cli import main

if __name__ == "__main__":
    sys.exit(main())
