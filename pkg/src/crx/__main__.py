from crx.cli import main

raise SystemExit(main())
