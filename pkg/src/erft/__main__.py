import sys

from erft.cli import main

sys.exit(main())
