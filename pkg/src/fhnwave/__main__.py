import sys

from fhnwave.cli import main

sys.exit(main())
