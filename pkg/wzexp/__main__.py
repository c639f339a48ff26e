#!/usr/bin/env python3

import sys

from wzexp.cli import run

sys.exit(run(sys.argv[1:]))
