import sys

from platoon_fdi.cli import main

sys.exit(main())
