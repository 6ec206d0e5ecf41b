# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .gains import *
from .neighborhood import *
from .quality import *
from .report import *
from .roc import *
