import sys

from muhs.cli import main

sys.exit(main())
