# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .cdconv import *
from .dlcm import *
from .features import *
from .layers import *
from .lsta import *
from .residual import *
