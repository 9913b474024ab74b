# kincal/__main__.py
import sys

from kincal.cli import main

sys.exit(main())
