import sys

from osched.cli import main

sys.exit(main())
