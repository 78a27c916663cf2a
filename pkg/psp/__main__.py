import sys

from psp.main import main

sys.exit(main())
