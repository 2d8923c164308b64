import sys

from povm_coherence.cli import main


sys.exit(main())
