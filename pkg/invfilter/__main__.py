import sys

from invfilter.main import main

sys.exit(main())
