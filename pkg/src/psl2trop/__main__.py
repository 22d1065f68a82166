import sys

from psl2trop.cli import main

sys.exit(main())
