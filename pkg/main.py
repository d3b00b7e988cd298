"""Main entry point for prec-sched: python main.py <subcommand> ..."""
import sys

from ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
