# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .checkpoint import *
from .config import *
from .model import *
from .trainer import *
