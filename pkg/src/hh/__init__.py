from .sampling import *
from .parameters import *
from .expander import *
from .prune import *
from .balanced import *
from .general import *
from .reduction import *
from .interface import *
