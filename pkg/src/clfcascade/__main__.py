import sys

from clfcascade.cli import main

sys.exit(main())
