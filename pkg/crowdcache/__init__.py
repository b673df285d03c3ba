VERSION = '1.1.0'


class CrowdcacheError(Exception):
    """Base class for every error raised by the crowdcache package."""
