import sys

from simproj.cli import main

sys.exit(main())
