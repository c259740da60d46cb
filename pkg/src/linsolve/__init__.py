from .leverage import *
from .sdd import *
from .inverse_maintenance import *
