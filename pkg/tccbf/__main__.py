import sys

from tccbf._cli import main

sys.exit(main())
