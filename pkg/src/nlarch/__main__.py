import sys

from nlarch.cli import main

sys.exit(main())
