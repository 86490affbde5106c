# gridform_cli.py
"""Main entry point for the command-line tool."""

import sys

from src.cli.app import main

if __name__ == "__main__":
    sys.exit(main())
