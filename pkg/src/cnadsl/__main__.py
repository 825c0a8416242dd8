import sys

from cnadsl.cli import main

sys.exit(main())
