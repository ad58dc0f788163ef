import sys

from ifbsa.harness.cli import main

sys.exit(main())
