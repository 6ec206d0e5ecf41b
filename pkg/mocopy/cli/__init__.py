# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .commands import *
from .config import *
from .gradcheck import *
from .main import *
