import sys

from etpa.cli_runner import main

sys.exit(main())
