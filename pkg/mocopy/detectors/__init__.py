# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .detect import *
from .ilcm import *
from .ipi import *
from .params import *
from .segment import *
from .tophat import *
