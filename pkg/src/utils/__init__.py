from .common_utils import *
from .exceptions import *
