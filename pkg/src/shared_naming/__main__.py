import sys

from shared_naming.cli import main

sys.exit(main())
