import sys

from treecap.cli import main

sys.exit(main())
