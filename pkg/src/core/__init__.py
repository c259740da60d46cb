from .graph import *
from .two_sparse import *
from .lp import *
