# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .io import *
from .resize import *
from .sequence import *
from .synth import *
