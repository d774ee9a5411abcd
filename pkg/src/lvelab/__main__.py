import sys

from lvelab.cli import main

sys.exit(main())
