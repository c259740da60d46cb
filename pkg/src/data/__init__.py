from .formats import *
from .generators import *
