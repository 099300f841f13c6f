import sys

from oudw.cli import main

sys.exit(main())
