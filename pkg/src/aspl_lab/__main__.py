from aspl_lab.cli import main

raise SystemExit(main())
