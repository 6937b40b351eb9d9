from hetshrink.cli import main

raise SystemExit(main())
