import sys

from btrv.cli import main

sys.exit(main())
