"""Row-type dependent predictive analysis.

Rows of a tabular dataset are partitioned by a designated row-type column;
each partition gets its own preprocessing, class rebalancing and classifier,
and new rows are routed to the model of their type.
"""

from rtdpa.errors import RtdpaError, RtdpaWarning

__version__ = "0.1.0"

__all__ = ["RtdpaError", "RtdpaWarning", "__version__"]
