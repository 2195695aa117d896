"""Console entry point for the pulseforge command."""

import sys

from .harness import cli


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
