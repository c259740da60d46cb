from .eigs import *
from .power import *
from .certificates import *
