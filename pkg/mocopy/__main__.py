# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

import sys

from mocopy.cli import main

sys.exit(main())
