#!env python


from __future__ import annotations

import sys

from heleshaw.cli import cli

if __name__ == "__main__":
    sys.exit(cli())
