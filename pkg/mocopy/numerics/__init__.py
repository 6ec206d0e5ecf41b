# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

from .gradcheck import *
from .linalg import *
from .optim import *
from .tensor import *
