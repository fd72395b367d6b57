#!/usr/bin/env python3
"""Entry point: python phonest.py <command> [options]."""

import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
