import sys

from kgauthz.cli import main

sys.exit(main())
